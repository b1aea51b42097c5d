/// Disjoint sets with path halving and union by size.
///
/// Each set also records its `oldest` member: the element that was added
/// first, i.e. the one with the smallest processing rank.
pub(crate) struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    oldest: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        let n32 = u32::try_from(n).expect("union-find capacity exceeds u32");
        Self { parent: (0..n32).collect(), size: vec![1; n], oldest: (0..n32).collect() }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    pub(crate) fn oldest(&self, root: u32) -> u32 {
        self.oldest[root as usize]
    }

    /// Merges the sets rooted at `a` and `b`; `keep_oldest` becomes the oldest member.
    pub(crate) fn link(&mut self, a: u32, b: u32, keep_oldest: u32) -> u32 {
        let (big, small) = if self.size[a as usize] >= self.size[b as usize] { (a, b) } else { (b, a) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        self.oldest[big as usize] = keep_oldest;
        big
    }
}

//! Dense 2D storage addressed by grid indices.
//!
//! Rows are y-lines (`j`), columns are x-positions (`i`). Each array covers a
//! contiguous column range `i0..i0 + ni` and all rows `0..=n_y + 1`, so the two
//! periodic ghost rows are always present. Reads outside the stored column
//! range panic.

use std::ops::{Index, IndexMut};

#[derive(Debug, Clone, PartialEq)]
pub struct Field2<T> {
    i0: usize,
    ni: usize,
    nj: usize,
    data: Vec<T>,
}

impl<T: Copy> Field2<T> {
    /// Columns `i_first..=i_last`, rows `0..nj`.
    pub fn new(i_first: usize, i_last: usize, nj: usize, fill: T) -> Self {
        assert!(i_last >= i_first, "empty column range");
        let ni = i_last - i_first + 1;
        Self {
            i0: i_first,
            ni,
            nj,
            data: vec![fill; ni * nj],
        }
    }

    pub fn from_fn(i_first: usize, i_last: usize, nj: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let ni = i_last - i_first + 1;
        let mut data = Vec::with_capacity(ni * nj);
        for j in 0..nj {
            for i in i_first..=i_last {
                data.push(f(i, j));
            }
        }
        Self {
            i0: i_first,
            ni,
            nj,
            data,
        }
    }

    #[inline]
    pub fn i_first(&self) -> usize {
        self.i0
    }

    #[inline]
    pub fn i_last(&self) -> usize {
        self.i0 + self.ni - 1
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.ni
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.nj
    }

    #[inline]
    pub fn contains_col(&self, i: usize) -> bool {
        i >= self.i0 && i < self.i0 + self.ni
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        assert!(
            self.contains_col(i) && j < self.nj,
            "index ({i}, {j}) outside stored range cols {}..={}, rows 0..{}",
            self.i0,
            self.i_last(),
            self.nj
        );
        j * self.ni + (i - self.i0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.offset(i, j);
        self.data[k] = v;
    }

    /// Full stored row `j`; element `k` is column `i_first() + k`.
    #[inline]
    pub fn row(&self, j: usize) -> &[T] {
        &self.data[j * self.ni..(j + 1) * self.ni]
    }

    #[inline]
    pub fn row_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.ni..(j + 1) * self.ni]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Copies row `n_rows - 2` into row 0 and row 1 into row `n_rows - 1`.
    pub fn refresh_periodic_rows(&mut self) {
        let ni = self.ni;
        let nj = self.nj;
        debug_assert!(nj >= 3);
        let (head, tail) = self.data.split_at_mut((nj - 2) * ni);
        head[..ni].copy_from_slice(&tail[..ni]);
        let row1: Vec<T> = head[ni..2 * ni].to_vec();
        tail[ni..2 * ni].copy_from_slice(&row1);
    }

    pub fn same_shape<U>(&self, other: &Field2<U>) -> bool {
        self.i0 == other.i0 && self.ni == other.ni && self.nj == other.nj
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Field2<U> {
        Field2 {
            i0: self.i0,
            ni: self.ni,
            nj: self.nj,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl<T: Copy> Index<(usize, usize)> for Field2<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[self.offset(i, j)]
    }
}

impl<T: Copy> IndexMut<(usize, usize)> for Field2<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        let k = self.offset(i, j);
        &mut self.data[k]
    }
}

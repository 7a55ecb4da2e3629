//! Row-major 2D grid storing cells in one flat vector. Row insertion shifts
//! the tail with raw pointer copies.

pub struct Grid<T> {
    cells: Vec<T>,
    cols: usize,
    rows: usize,
}

impl<T: Clone> Grid<T> {
    /// Empty grid with reserved cell storage.
    pub fn with_capacity(cap: usize) -> Grid<T> {
        Grid {
            cells: Vec::with_capacity(cap),
            cols: 0,
            rows: 0,
        }
    }

    /// Grid of `cols` x `rows` cells, every cell a clone of `val`.
    pub fn init(cols: usize, rows: usize, val: T) -> Grid<T> {
        let mut cells = Vec::with_capacity(cols * rows);
        let mut i = 0;
        while i < cols * rows {
            cells.push(val.clone());
            i += 1;
        }
        Grid { cells, cols, rows }
    }

    /// Grid over an existing flat cell vector.
    pub fn from_vec(cols: usize, rows: usize, v: Vec<T>) -> Grid<T> {
        assert!(v.len() == cols * rows, "cell count must equal cols * rows");
        Grid { cells: v, cols, rows }
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    /// Inserts `row` before row `index`, shifting later rows up.
    pub fn insert_row(&mut self, index: usize, mut row: Vec<T>) {
        assert!(index <= self.rows, "row index out of bounds");
        if self.rows == 0 {
            self.cols = row.len();
            while row.len() > 0 {
                self.cells.push(row.remove(0));
            }
            self.rows = 1;
            return;
        }
        assert!(row.len() == self.cols, "row width mismatch");
        let start = index * self.cols;
        let old_len = self.cells.len();
        self.cells.reserve(row.len());
        unsafe {
            let base = self.cells.as_mut_ptr();
            std::ptr::copy(
                base.add(start),
                base.add(start + row.len()),
                old_len - start + row.len(),
            );
            let src = row.as_ptr();
            let mut i = 0;
            while i < row.len() {
                std::ptr::write(base.add(start + i), std::ptr::read(src.add(i)));
                i += 1;
            }
            self.cells.set_len(old_len + row.len());
        }
        std::mem::forget(row);
        self.rows += 1;
    }
}

//! Vector wrapper with a predicate-driven draining iterator. The iterator
//! compacts kept elements in place and fixes the length in its destructor.

pub struct DrainVec<T> {
    buf: Vec<T>,
}

impl<T> DrainVec<T> {
    pub fn new() -> DrainVec<T> {
        DrainVec { buf: Vec::new() }
    }

    pub fn from_vec(v: Vec<T>) -> DrainVec<T> {
        DrainVec { buf: v }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn push(&mut self, val: T) {
        self.buf.push(val);
    }

    /// Returns an iterator yielding elements `pred` selects, removing them.
    pub fn drain_filter<'a, F: FnMut(&mut T) -> bool>(&'a mut self, pred: F) -> DrainFilter<'a, T, F> {
        let old_len = self.len();
        DrainFilter {
            parent: self,
            pred,
            idx: 0,
            del: 0,
            old_len,
        }
    }
}

pub struct DrainFilter<'a, T, F: FnMut(&mut T) -> bool> {
    parent: &'a mut DrainVec<T>,
    pred: F,
    idx: usize,
    del: usize,
    old_len: usize,
}

impl<'a, T, F: FnMut(&mut T) -> bool> DrainFilter<'a, T, F> {
    pub fn next(&mut self) -> Option<T> {
        unsafe {
            while self.idx != self.old_len {
                let i = self.idx;
                self.idx += 1;
                let base = self.parent.buf.as_mut_ptr();
                let item = &mut *base.add(i);
                if (self.pred)(item) {
                    self.del += 1;
                    return Some(std::ptr::read(base.add(i)));
                } else if self.del > 0 {
                    let src = base.add(i);
                    let dst = base.add(i - self.del);
                    std::ptr::copy_nonoverlapping(src, dst, 1);
                }
            }
        }
        None
    }
}

impl<'a, T, F: FnMut(&mut T) -> bool> Drop for DrainFilter<'a, T, F> {
    fn drop(&mut self) {
        while let Some(_item) = self.next() {}
        let new_len = self.old_len - self.del;
        unsafe {
            self.parent.buf.set_len(new_len);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major table with an explicit shape.
///
/// Serialized as `{"shape": [...], "data": [...]}`; the data length must equal
/// the product of the shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid<T>")]
pub struct Grid<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

#[derive(Deserialize)]
struct RawGrid<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> TryFrom<RawGrid<T>> for Grid<T> {
    type Error = Error;

    fn try_from(raw: RawGrid<T>) -> Result<Self> {
        Grid::from_vec(raw.shape, raw.data)
    }
}

impl<T> Grid<T> {
    pub fn from_vec(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::dim(format!(
                "grid shape {shape:?} holds {len} cells but {} were given",
                data.len()
            )));
        }
        Ok(Grid { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row-major offset of a multi-index. Panics on rank or range errors.
    pub fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "grid rank mismatch");
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &n)| {
                assert!(i < n, "grid index {i} out of range {n}");
                acc * n + i
            })
    }

    pub fn get(&self, index: &[usize]) -> &T {
        &self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: T) {
        let at = self.offset(index);
        self.data[at] = value;
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let len = shape.iter().product();
        Grid {
            shape,
            data: vec![value; len],
        }
    }
}

impl Grid<usize> {
    /// Fails if any cell is not below `bound`.
    pub fn check_bound(&self, bound: usize, what: &str) -> Result<()> {
        match self.data.iter().find(|&&v| v >= bound) {
            Some(v) => Err(Error::dim(format!("{what}: entry {v} not below {bound}"))),
            None => Ok(()),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_row_major() {
        let g = Grid::filled(vec![2, 3, 4], 0u8);
        assert_eq!(g.offset(&[0, 0, 0]), 0);
        assert_eq!(g.offset(&[0, 0, 3]), 3);
        assert_eq!(g.offset(&[0, 1, 0]), 4);
        assert_eq!(g.offset(&[1, 2, 3]), 23);
    }

    #[test]
    fn rejects_bad_length() {
        assert!(Grid::from_vec(vec![2, 2], vec![1, 2, 3]).is_err());
        let json = r#"{"shape":[2],"data":[1,2,3]}"#;
        assert!(serde_json::from_str::<Grid<usize>>(json).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let g = Grid::from_vec(vec![2, 2], vec![0usize, 1, 1, 0]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"shape":[2,2],"data":[0,1,1,0]}"#);
        assert_eq!(serde_json::from_str::<Grid<usize>>(&s).unwrap(), g);
    }
}

use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::Rng;

/// Endless sequence of examples in shuffled epochs; each epoch is a fresh
/// permutation drawn from the stream's generator.
#[derive(Debug, Clone)]
pub struct ExampleStream<'a> {
    data: &'a Dataset,
    rng: Rng,
    order: Vec<usize>,
    pos: usize,
}

impl<'a> ExampleStream<'a> {
    pub fn new(data: &'a Dataset, rng: Rng) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::param("cannot stream an empty dataset"));
        }
        let mut s = Self {
            data,
            rng,
            order: (0..data.len()).collect(),
            pos: 0,
        };
        s.rng.shuffle(&mut s.order);
        Ok(s)
    }

    pub fn next_index(&mut self) -> usize {
        if self.pos == self.order.len() {
            self.order.sort_unstable();
            self.rng.shuffle(&mut self.order);
            self.pos = 0;
        }
        let i = self.order[self.pos];
        self.pos += 1;
        i
    }
}

impl Iterator for ExampleStream<'_> {
    type Item = (Vec<f64>, usize);

    fn next(&mut self) -> Option<Self::Item> {
        let i = self.next_index();
        Some(self.data.example(i))
    }
}

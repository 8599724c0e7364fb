use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Second-order statistics of a paired design `(X, Y)`, additive over row
/// blocks so that any subset of trials is a sum of per-trial statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossStats {
    pub n: f64,
    pub sx: DVector<f64>,
    pub sy: DVector<f64>,
    pub xx: DMatrix<f64>,
    pub xy: DMatrix<f64>,
    pub yy: DMatrix<f64>,
}

impl CrossStats {
    pub fn zeros(dx: usize, dy: usize) -> Self {
        Self {
            n: 0.0,
            sx: DVector::zeros(dx),
            sy: DVector::zeros(dy),
            xx: DMatrix::zeros(dx, dx),
            xy: DMatrix::zeros(dx, dy),
            yy: DMatrix::zeros(dy, dy),
        }
    }

    pub fn from_designs(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        let sum_cols = |m: &DMatrix<f64>| DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()));
        Self {
            n: x.nrows() as f64,
            sx: sum_cols(x),
            sy: sum_cols(y),
            xx: x.tr_mul(x),
            xy: x.tr_mul(y),
            yy: y.tr_mul(y),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.sx.len(), self.sy.len())
    }

    pub fn add_assign(&mut self, o: &Self) {
        self.n += o.n;
        self.sx += &o.sx;
        self.sy += &o.sy;
        self.xx += &o.xx;
        self.xy += &o.xy;
        self.yy += &o.yy;
    }

    pub fn sub_assign(&mut self, o: &Self) {
        self.n -= o.n;
        self.sx -= &o.sx;
        self.sy -= &o.sy;
        self.xx -= &o.xx;
        self.xy -= &o.xy;
        self.yy -= &o.yy;
    }

    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut it = items.into_iter();
        let mut acc = it
            .next()
            .ok_or_else(|| Error::InvalidArgument("no statistics to combine".into()))?
            .clone();
        for s in it {
            if s.dims() != acc.dims() {
                let (a, b) = (acc.dims(), s.dims());
                return Err(Error::shape("CrossStats::sum", &[a.0, a.1], &[b.0, b.1]));
            }
            acc.add_assign(s);
        }
        Ok(acc)
    }

    /// Centered scatter matrices `(Cxx, Cxy, Cyy)`.
    pub fn centered(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n.max(1.0);
        let cxx = &self.xx - &self.sx * self.sx.transpose() / n;
        let cxy = &self.xy - &self.sx * self.sy.transpose() / n;
        let cyy = &self.yy - &self.sy * self.sy.transpose() / n;
        (cxx, cxy, cyy)
    }
}

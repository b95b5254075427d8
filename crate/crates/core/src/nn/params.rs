/// A named, shaped block of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl ParamArray {
    /// Arrays named `*.weight` carry the L2 penalty; biases do not.
    pub fn is_regularized(&self) -> bool {
        self.name.ends_with(".weight")
    }
}

/// Ordered parameter arrays with flat indexing across all of them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    arrays: Vec<ParamArray>,
    offsets: Vec<usize>,
    len: usize,
}

impl ParamSet {
    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        self.offsets.push(self.len);
        self.len += data.len();
        self.arrays.push(ParamArray {
            name: name.into(),
            shape,
            data,
        });
    }

    pub fn push_zeros(&mut self, name: impl Into<String>, shape: Vec<usize>) {
        let n = shape.iter().product();
        self.push(name, shape, vec![0.0; n]);
    }

    pub fn zeros_like(&self) -> ParamSet {
        let mut out = ParamSet::default();
        for a in &self.arrays {
            out.push_zeros(a.name.clone(), a.shape.clone());
        }
        out
    }

    pub fn arrays(&self) -> &[ParamArray] {
        &self.arrays
    }

    pub fn array(&self, i: usize) -> &[f64] {
        &self.arrays[i].data
    }

    pub fn array_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.arrays[i].data
    }

    /// Total number of scalars.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn locate(&self, flat: usize) -> (usize, usize) {
        let a = self.offsets.partition_point(|&o| o <= flat) - 1;
        (a, flat - self.offsets[a])
    }

    pub fn get(&self, flat: usize) -> f64 {
        let (a, i) = self.locate(flat);
        self.arrays[a].data[i]
    }

    pub fn set(&mut self, flat: usize, v: f64) {
        let (a, i) = self.locate(flat);
        self.arrays[a].data[i] = v;
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.arrays.iter().flat_map(|a| a.data.iter().copied())
    }

    pub fn all_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    /// Σ w² over regularized arrays.
    pub fn weight_sq_norm(&self) -> f64 {
        self.arrays
            .iter()
            .filter(|a| a.is_regularized())
            .flat_map(|a| &a.data)
            .map(|w| w * w)
            .sum()
    }

    /// `self += alpha * other` (shapes must match).
    pub fn add_scaled(&mut self, other: &ParamSet, alpha: f64) {
        for (a, b) in self.arrays.iter_mut().zip(&other.arrays) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    /// Adds the L2 penalty gradient `l2 * w` of `params` to these gradients.
    pub fn add_l2_grad(&mut self, params: &ParamSet, l2: f64) {
        for (g, p) in self.arrays.iter_mut().zip(&params.arrays) {
            if p.is_regularized() {
                for (x, w) in g.data.iter_mut().zip(&p.data) {
                    *x += l2 * w;
                }
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.arrays {
            a.data.iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn same_layout(&self, other: &ParamSet) -> bool {
        self.arrays.len() == other.arrays.len()
            && self
                .arrays
                .iter()
                .zip(&other.arrays)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }
}

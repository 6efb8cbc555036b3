use crate::Matrix;

/// Monomials up to total degree `d_max`, ordered by degree and then lexicographically
/// by variable index; the first term is the constant 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateLibrary {
    pub dim: usize,
    pub degree: usize,
    /// Exponent of each state variable, per term.
    pub terms: Vec<Vec<u32>>,
    pub variable_names: Vec<String>,
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

impl CandidateLibrary {
    pub fn polynomial(dim: usize, degree: usize) -> Self {
        let mut terms = Vec::with_capacity(binomial(dim + degree, degree));
        for deg in 0..=degree {
            push_monomials(dim, 0, deg, &mut vec![0; dim], &mut terms);
        }
        let variable_names = default_names(dim);
        Self { dim, degree, terms, variable_names }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.terms.iter().position(|t| t == exponents)
    }

    /// Readable term name such as `1`, `x`, `x^2` or `x*z`.
    pub fn term_name(&self, q: usize) -> String {
        let parts: Vec<String> = self.terms[q]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0)
            .map(|(i, &p)| {
                let v = &self.variable_names[i];
                if p == 1 {
                    v.clone()
                } else {
                    format!("{v}^{p}")
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }

    pub fn evaluate(&self, state: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.dim);
        self.terms.iter().map(|t| t.iter().zip(state).map(|(&p, &x)| x.powi(p as i32)).product()).collect()
    }

    /// `Θ(Y)`: one row per column of `values` (`dim × N`), shape `N × Q`.
    pub fn evaluate_batch(&self, values: &Matrix) -> Matrix {
        assert_eq!(values.nrows(), self.dim);
        let mut theta = Matrix::zeros(values.ncols(), self.len());
        for (n, col) in values.column_iter().enumerate() {
            let state: Vec<f64> = col.iter().copied().collect();
            for (q, v) in self.evaluate(&state).into_iter().enumerate() {
                theta[(n, q)] = v;
            }
        }
        theta
    }
}

/// Appends every exponent vector of total degree `remaining` over variables `start..`,
/// in lexicographic order of the sorted variable-index sequence.
fn push_monomials(dim: usize, start: usize, remaining: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for i in start..dim {
        current[i] += 1;
        push_monomials(dim, i, remaining - 1, current, out);
        current[i] -= 1;
    }
}

pub(crate) fn default_names(dim: usize) -> Vec<String> {
    if dim <= 3 {
        ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}

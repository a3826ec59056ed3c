//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] dispatches to rayon;
//! without it every policy runs sequentially. Results are always collected in
//! index order and reduced sequentially, so sums do not depend on the thread count.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                (0..n).into_par_iter().map(f).collect()
            }
            _ => (0..n).map(f).collect(),
        }
    }

    pub fn map_slice<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }
}

/// Neumaier-compensated sum, taken in slice order.
pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn compensated_sum_c(xs: impl IntoIterator<Item = num_complex::Complex64>) -> num_complex::Complex64 {
    let v: Vec<_> = xs.into_iter().collect();
    num_complex::Complex64::new(compensated_sum(v.iter().map(|z| z.re)), compensated_sum(v.iter().map(|z| z.im)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = compensated_sum(Exec::Sequential.map(10_000, f));
        let b = compensated_sum(Exec::Parallel.map(10_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn compensation_helps() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}

use statrs::distribution::{ContinuousCDF, StudentsT};

/// Paired one-sided t-test of `mean(a - b) < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p_value: f64,
}

/// `None` with fewer than two pairs. Identical differences give `t = -inf`
/// or `+inf` (or zero) and the matching limiting p-value.
pub fn paired_t_less(a: &[f64], b: &[f64]) -> Option<PairedTTest> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let (t, p) = if se == 0.0 {
        let p = if mean < 0.0 { 0.0 } else if mean > 0.0 { 1.0 } else { 0.5 };
        (mean.signum() * if mean == 0.0 { 0.0 } else { f64::INFINITY }, p)
    } else {
        let t = mean / se;
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).ok()?;
        (t, dist.cdf(t))
    };
    Some(PairedTTest { n, mean_diff: mean, t, p_value: p })
}

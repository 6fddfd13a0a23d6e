use proptest::prelude::*;
use tcomp_core::io::{read_observations, read_tensor_binary, read_tensor_text, write_observations, write_tensor_binary, write_tensor_text};
use tcomp_core::{DenseTensor, ObservationSet, Shape, Tensor};

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5)
}

fn tensor() -> impl Strategy<Value = Tensor> {
    dims().prop_flat_map(|d| {
        let len: usize = d.iter().product();
        prop::collection::vec(-10.0f64..10.0, len)
            .prop_map(move |v| DenseTensor::from_vec(Shape::new(d.clone()).unwrap(), v).unwrap())
    })
}

fn tensor_pair() -> impl Strategy<Value = (Tensor, Tensor)> {
    dims().prop_flat_map(|d| {
        let len: usize = d.iter().product();
        let s = Shape::new(d).unwrap();
        (prop::collection::vec(-10.0f64..10.0, len), prop::collection::vec(-10.0f64..10.0, len))
            .prop_map(move |(a, b)| (DenseTensor::from_vec(s.clone(), a).unwrap(), DenseTensor::from_vec(s.clone(), b).unwrap()))
    })
}

/// Sum of squares in a fixed order different from any matricization.
fn naive_sq(t: &Tensor) -> f64 {
    t.as_slice().iter().rev().map(|x| x * x).sum()
}

proptest! {
    #[test]
    fn fold_unfold_is_bit_exact(t in tensor()) {
        for mode in 1..=t.shape().order() {
            let m = t.unfold(mode).unwrap();
            prop_assert_eq!(m.matrix.rows(), t.shape().dims()[mode - 1]);
            prop_assert_eq!(m.matrix.rows() * m.matrix.cols(), t.shape().len());
            let back = DenseTensor::fold(&m, t.shape()).unwrap();
            prop_assert!(back.as_slice().iter().zip(t.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn columns_are_fibers(d in dims()) {
        // Entries encode their own offset, so each column can be decoded back to indices.
        let shape = Shape::new(d).unwrap();
        let t = DenseTensor::from_vec(shape.clone(), (0..shape.len()).map(|k| k as f64).collect()).unwrap();
        for mode in 1..=shape.order() {
            let m = t.unfold(mode).unwrap().matrix;
            for j in 0..m.cols() {
                let anchor = shape.multi_index(m.col(j)[0] as usize);
                for (i, &v) in m.col(j).iter().enumerate() {
                    let mut expect = anchor.clone();
                    expect[mode - 1] = i + 1;
                    prop_assert_eq!(shape.multi_index(v as usize), expect);
                }
            }
        }
    }

    #[test]
    fn matricization_preserves_norm(t in tensor()) {
        let direct = naive_sq(&t).sqrt();
        for mode in 1..=t.shape().order() {
            let f = t.unfold(mode).unwrap().matrix.frobenius_norm();
            prop_assert!((f - direct).abs() <= 1e-12 * (1.0 + direct));
        }
        prop_assert!((t.frobenius_norm() - t.inner(&t).unwrap().sqrt()).abs() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn unfold_is_linear((a, b) in tensor_pair(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let combo = a.lin_comb(x, &b, y).unwrap();
        for mode in 1..=a.shape().order() {
            let lhs = combo.unfold(mode).unwrap().matrix;
            let (ua, ub) = (a.unfold(mode).unwrap().matrix, b.unfold(mode).unwrap().matrix);
            for ((l, p), q) in lhs.as_slice().iter().zip(ua.as_slice()).zip(ub.as_slice()) {
                prop_assert!((l - (x * p + y * q)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn inner_matches_matricizations((a, b) in tensor_pair()) {
        let direct: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| p * q).sum();
        for mode in 1..=a.shape().order() {
            let (ua, ub) = (a.unfold(mode).unwrap().matrix, b.unfold(mode).unwrap().matrix);
            let m: f64 = ua.as_slice().iter().zip(ub.as_slice()).map(|(p, q)| p * q).sum();
            prop_assert!((m - direct).abs() <= 1e-9);
        }
    }

    #[test]
    fn linear_index_round_trip(d in dims(), seed in 0usize..1000) {
        let s = Shape::new(d).unwrap();
        let k = seed % s.len();
        prop_assert_eq!(s.linear_index(&s.multi_index(k)).unwrap(), k);
    }

    #[test]
    fn text_and_binary_round_trip(t in tensor()) {
        let mut text = Vec::new();
        write_tensor_text(&t, &mut text).unwrap();
        prop_assert_eq!(read_tensor_text::<f64, _>(&text[..]).unwrap(), t.clone());
        let mut bin = Vec::new();
        write_tensor_binary(&t, &mut bin).unwrap();
        prop_assert_eq!(read_tensor_binary::<f64, _>(&bin[..]).unwrap(), t);
    }

    #[test]
    fn observation_file_round_trip(t in tensor(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..20)) {
        let mut offs: Vec<usize> = picks.iter().map(|i| i.index(t.shape().len())).collect();
        offs.sort_unstable();
        offs.dedup();
        let obs = ObservationSet::sample(&t, &offs).unwrap();
        let mut buf = Vec::new();
        write_observations(&obs, &mut buf).unwrap();
        prop_assert_eq!(read_observations::<f64, _>(&buf[..]).unwrap(), obs);
    }
}

#[test]
fn fold_unfold_bit_exact_on_fixed_shape() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let shape = Shape::new(vec![4, 3, 5]).unwrap();
    for _ in 0..100 {
        let t = DenseTensor::from_fn(shape.clone(), |_| rng.random_range(-1.0..1.0));
        for mode in 1..=3 {
            assert_eq!(DenseTensor::fold(&t.unfold(mode).unwrap(), &shape).unwrap(), t);
        }
    }
}

#[test]
fn fold_zero_matrix_is_zero_tensor() {
    let shape = Shape::new(vec![2, 3, 2]).unwrap();
    let z = Tensor::zeros(shape.clone());
    let m = z.unfold(2).unwrap();
    assert_eq!(DenseTensor::fold(&m, &shape).unwrap(), z);
}

#[test]
fn f32_tensors_round_trip() {
    let shape = Shape::new(vec![3, 2, 2]).unwrap();
    let t = DenseTensor::<f32>::from_fn(shape.clone(), |i| (i[0] * 7 + i[1] * 3 + i[2]) as f32 / 3.0);
    for mode in 1..=3 {
        assert_eq!(DenseTensor::fold(&t.unfold(mode).unwrap(), &shape).unwrap(), t);
    }
}

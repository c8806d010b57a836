use std::io::Write;
use std::sync::{Arc, Mutex};

use avgmdp::instances::make_random_communicating;
use avgmdp::sampling::{collect_uniform, top_up, GenerativeModel, SampleStore};
use avgmdp::{Kernel, TabularMdp};

fn coin() -> TabularMdp {
    let k = Kernel::new(2, 1, vec![0.3, 0.7, 1.0, 0.0]).unwrap();
    TabularMdp::new(k, vec![0.5, 0.5]).unwrap()
}

#[test]
fn million_draws_within_four_sigma() {
    let mdp = coin();
    let mut gm = GenerativeModel::new(&mdp, 42);
    let mut store = SampleStore::for_model(&gm);
    let n = 1_000_000u64;
    gm.sample_into(0, 0, n, &mut store).unwrap();
    let hits = store.next_counts(0, 0)[0] as f64;
    let sigma = (n as f64 * 0.3 * 0.7).sqrt();
    assert!((hits - 0.3 * n as f64).abs() <= 4.0 * sigma, "{hits}");
    // per-sample path agrees in law too
    let mut ones = 0;
    for _ in 0..100_000 {
        ones += (gm.sample(0, 0).unwrap().next == 0) as u32;
    }
    let sigma = (1e5f64 * 0.21).sqrt();
    assert!((ones as f64 - 3e4).abs() <= 4.0 * sigma);
}

#[test]
fn empirical_rows() {
    let mut store = SampleStore::new(3, 1);
    assert_eq!(store.empirical_row(0, 0), vec![1.0 / 3.0; 3]);
    store.record_batch(0, 0, &[2, 0, 2], 1.0);
    assert_eq!(store.empirical_row(0, 0), vec![0.5, 0.0, 0.5]);
}

#[test]
fn uniform_collection_counts() {
    let mdp = make_random_communicating(3, 2, 1).unwrap();
    let mut gm = GenerativeModel::new(&mdp, 1);
    let mut store = SampleStore::for_model(&gm);
    collect_uniform(&mut gm, &mut store, 0).unwrap();
    assert_eq!(store.total(), 0);
    collect_uniform(&mut gm, &mut store, 5).unwrap();
    assert_eq!(store.total(), 30);
    assert_eq!(gm.samples_drawn(), 30);
    top_up(&mut gm, &mut store, 4).unwrap();
    assert_eq!(store.total(), 30);
    top_up(&mut gm, &mut store, 9).unwrap();
    assert_eq!(store.min_count(), 9);
    assert!(store.check_invariants());
}

#[test]
fn large_samples_approach_the_kernel() {
    let mdp = make_random_communicating(4, 2, 3).unwrap();
    let mut gm = GenerativeModel::new(&mdp, 3);
    let mut store = SampleStore::for_model(&gm);
    collect_uniform(&mut gm, &mut store, 100_000).unwrap();
    for s in 0..4 {
        for a in 0..2 {
            let tv: f64 =
                store.empirical_row(s, a).iter().zip(mdp.row(s, a)).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0;
            assert!(tv <= 0.01, "{tv}");
        }
    }
}

#[test]
fn equal_seeds_give_equal_streams() {
    let mdp = make_random_communicating(3, 2, 8).unwrap();
    let mut a = GenerativeModel::new(&mdp, 77);
    let mut b = GenerativeModel::new(&mdp, 77);
    for i in 0..500 {
        let (s, act) = (i % 3, i % 2);
        assert_eq!(a.sample(s, act).unwrap(), b.sample(s, act).unwrap());
    }
}

#[derive(Clone, Default)]
struct Shared(Arc<Mutex<Vec<u8>>>);

impl Write for Shared {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn trace_has_one_line_per_sample() {
    let mdp = coin();
    let sink = Shared::default();
    let mut gm = GenerativeModel::new(&mdp, 5);
    gm.set_trace(Box::new(sink.clone())).unwrap();
    let mut store = SampleStore::for_model(&gm);
    collect_uniform(&mut gm, &mut store, 7).unwrap();
    let text = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,s,a,next,reward");
    assert_eq!(lines.len(), 1 + 14);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
}

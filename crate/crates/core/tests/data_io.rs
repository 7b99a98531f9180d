use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trustfuse::data::{
    inject_noise, load_dataset, split, synth_conflict, write_dataset, Matrix, SynthSpec,
};
use trustfuse::{Error, MultiViewDataset};

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

#[test]
fn write_then_load_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let views = [3usize, 1, 5]
        .iter()
        .map(|&d| {
            let data = (0..7 * d)
                .map(|_| rng.random_range(-1e6..1e6) * rng.random::<f64>().powi(40))
                .collect();
            Matrix::new(7, d, data).unwrap()
        })
        .collect();
    let ds = MultiViewDataset::new(4, views, vec![0, 1, 2, 3, 3, 2, 1]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
    assert_eq!(back.fingerprint(), ds.fingerprint());
}

#[test]
fn synth_files_are_byte_identical_per_seed() {
    let spec = SynthSpec::new(3, 2, 50, 8);
    let (a, b, c) = (
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
        tempfile::tempdir().unwrap(),
    );
    write_dataset(&synth_conflict(&spec).unwrap(), a.path()).unwrap();
    write_dataset(&synth_conflict(&spec).unwrap(), b.path()).unwrap();
    write_dataset(
        &synth_conflict(&SynthSpec { seed: 9, ..spec }).unwrap(),
        c.path(),
    )
    .unwrap();
    assert_eq!(files(a.path()), files(b.path()));
    assert_ne!(files(a.path()), files(c.path()));
}

/// Per-class mean of one view's first feature.
fn class_means(ds: &MultiViewDataset, view: usize) -> Vec<Vec<f64>> {
    let k = ds.num_classes();
    let d = ds.view(view).cols();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0.0; k];
    for (i, &y) in ds.labels().iter().enumerate() {
        for (s, x) in sums[y].iter_mut().zip(ds.view(view).row(i)) {
            *s += x;
        }
        counts[y] += 1.0;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| s.into_iter().map(|x| x / c).collect())
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// A fully misleading view puts class 0 where the honest generator would
/// put class 1 and vice versa. Checked against the same spec without the
/// misleading view, which shares the class means.
#[test]
fn misleading_view_swaps_class_means() {
    let mut spec = SynthSpec::new(3, 2, 3000, 5);
    spec.noise = vec![0.5, 0.5];
    spec.mislead_rate = 1.0;
    let honest = synth_conflict(&spec).unwrap();
    spec.misleading = vec![1];
    let misled = synth_conflict(&spec).unwrap();

    let h = class_means(&honest, 1);
    let m = class_means(&misled, 1);
    // Sampling error of a mean over 1000 points at noise 0.5 is ~0.016 per
    // coordinate; separations are ~3.
    assert!(distance(&m[0], &h[1]) < 0.2, "{:?} vs {:?}", m[0], h[1]);
    assert!(distance(&m[1], &h[0]) < 0.2);
    assert!(distance(&m[2], &h[2]) < 0.2);
    assert!(distance(&h[0], &h[1]) > 1.0);
    // The honest view is unchanged.
    assert_eq!(class_means(&honest, 0), class_means(&misled, 0));
}

#[test]
fn handwritten_shaped_dataset_loads() {
    // Six views with the feature sizes of the Handwritten digits set.
    let dims = [240usize, 76, 216, 47, 64, 6];
    let n = 20;
    let dir = tempfile::tempdir().unwrap();
    let dims_text: Vec<String> = dims.iter().map(ToString::to_string).collect();
    fs::write(
        dir.path().join("meta"),
        format!(
            "classes = 10\nviews = 6\ninstances = {n}\ndims = {}\n",
            dims_text.join(",")
        ),
    )
    .unwrap();
    for (v, &d) in dims.iter().enumerate() {
        let rows: Vec<String> = (0..n)
            .map(|i| {
                (0..d)
                    .map(|j| format!("{}", (i * d + j) % 17))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        fs::write(
            dir.path().join(format!("view{}.csv", v + 1)),
            rows.join("\n"),
        )
        .unwrap();
    }
    let labels: Vec<String> = (0..n).map(|i| (i % 10).to_string()).collect();
    fs::write(dir.path().join("labels.txt"), labels.join("\n")).unwrap();

    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.dims(), dims);
    assert_eq!(ds.num_classes(), 10);
    assert_eq!(ds.len(), n);
}

#[test]
fn load_errors_name_the_problem() {
    let ds = synth_conflict(&SynthSpec::new(3, 2, 10, 0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let fresh = || {
        write_dataset(&ds, dir.path()).unwrap();
    };
    let message = |e: Error| e.to_string();

    assert!(load_dataset(dir.path().join("missing")).is_err());

    fresh();
    fs::write(
        dir.path().join("labels.txt"),
        "0\n1\n7\n0\n1\n2\n0\n1\n2\n0\n",
    )
    .unwrap();
    assert!(message(load_dataset(dir.path()).unwrap_err()).contains("out of range"));

    fresh();
    let text = fs::read_to_string(dir.path().join("view2.csv")).unwrap();
    let truncated: Vec<&str> = text.lines().take(9).collect();
    fs::write(dir.path().join("view2.csv"), truncated.join("\n")).unwrap();
    assert!(message(load_dataset(dir.path()).unwrap_err()).contains("9 rows"));

    fresh();
    fs::write(dir.path().join("view1.csv"), text.replacen(',', ",NaN,", 1)).unwrap();
    assert!(load_dataset(dir.path()).is_err());

    fresh();
    let meta = fs::read_to_string(dir.path().join("meta")).unwrap();
    fs::write(
        dir.path().join("meta"),
        meta.replace("views = 2", "views = 3"),
    )
    .unwrap();
    assert!(message(load_dataset(dir.path()).unwrap_err()).contains("dims"));

    fresh();
    fs::write(dir.path().join("meta"), format!("{meta}colour = blue\n")).unwrap();
    assert!(message(load_dataset(dir.path()).unwrap_err()).contains("unknown key"));
}

#[test]
fn noise_only_touches_chosen_test_instances() {
    let ds = split(
        synth_conflict(&SynthSpec::new(3, 3, 200, 2)).unwrap(),
        0.8,
        2,
    )
    .unwrap();
    let noisy = inject_noise(&ds, 1.0, 0.5, 3).unwrap();
    for &i in ds.train_indices() {
        assert_eq!(noisy.instance(i), ds.instance(i));
    }
    let changed: Vec<usize> = ds
        .test_indices()
        .iter()
        .copied()
        .filter(|&i| noisy.instance(i) != ds.instance(i))
        .collect();
    assert_eq!(changed.len(), ds.test_indices().len() / 2);
    for &i in &changed {
        let views_changed = (0..3)
            .filter(|&v| noisy.view(v).row(i) != ds.view(v).row(i))
            .count();
        assert_eq!(views_changed, 1);
    }
    assert_eq!(inject_noise(&ds, 0.0, 1.0, 3).unwrap(), ds);
}

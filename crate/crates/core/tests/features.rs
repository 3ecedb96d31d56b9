use fmtrack::dataset::default_intrinsics_160;
use fmtrack::features::{make_frame, read_feature_file, write_feature_file, FeatureError, FeatureFile, FeatureLevel, FeatureProvider};
use fmtrack::imagegrid::DenseMap;
use fmtrack::Frame64;
use proptest::prelude::*;

fn level(w: usize, h: usize, c: usize, seed: f32) -> FeatureLevel {
    FeatureLevel {
        height: h,
        width: w,
        channels: c,
        features: (0..w * h * c).map(|i| (i as f32 * 0.37 + seed).sin()).collect(),
        uncertainty: (0..w * h).map(|i| 0.5 + (i as f32 * 0.11 + seed).cos().abs()).collect(),
    }
}

#[test]
fn eight_channel_file_loads_into_a_frame() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.dfmt");
    let file = FeatureFile {
        levels: vec![level(160, 120, 8, 0.1), level(80, 60, 8, 0.2), level(40, 30, 8, 0.3), level(20, 15, 8, 0.4)],
    };
    write_feature_file(&path, &file).unwrap();
    let img = DenseMap::filled(160, 120, 1, 0.5);
    let depth = DenseMap::filled(160, 120, 1, 1.5);
    let frame: Frame64 = make_frame(
        0.0,
        img,
        depth,
        default_intrinsics_160(),
        &FeatureProvider::External(path.clone()),
        4,
    )
    .unwrap();
    assert_eq!(frame.channels(), 8);
    let shapes: Vec<_> = (0..4).map(|l| (frame.features().map(l).width(), frame.features().map(l).height())).collect();
    assert_eq!(shapes, vec![(160, 120), (80, 60), (40, 30), (20, 15)]);
    assert_eq!(frame.features().map(2).get(5, 7, 3), file.levels[2].features[(7 * 40 + 5) * 8 + 3] as f64);

    let exported = FeatureFile::from_frame(&frame);
    assert_eq!(exported, file);

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_feature_file(&path), Err(FeatureError::ExternalFormat(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn encode_decode_is_bit_exact(
        dims in prop::collection::vec((1usize..9, 1usize..9, 1usize..5), 1..4),
        vals in prop::collection::vec(-1e6f32..1e6, 300),
        sig in prop::collection::vec(1e-6f32..1e3, 100),
    ) {
        let levels = dims
            .iter()
            .map(|&(w, h, c)| FeatureLevel {
                height: h,
                width: w,
                channels: c,
                features: (0..w * h * c).map(|i| vals[i % vals.len()]).collect(),
                uncertainty: (0..w * h).map(|i| sig[i % sig.len()]).collect(),
            })
            .collect();
        let file = FeatureFile { levels };
        let back = FeatureFile::decode(&file.encode().unwrap()).unwrap();
        for (a, b) in file.levels.iter().zip(&back.levels) {
            prop_assert!(a.features.iter().zip(&b.features).all(|(x, y)| x.to_bits() == y.to_bits()));
            prop_assert!(a.uncertainty.iter().zip(&b.uncertainty).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        prop_assert_eq!(back, file);
    }

    #[test]
    fn truncation_is_rejected(cut in 1usize..40) {
        let file = FeatureFile { levels: vec![level(3, 2, 2, 0.0)] };
        let bytes = file.encode().unwrap();
        let cut = cut.min(bytes.len());
        prop_assert!(FeatureFile::decode(&bytes[..bytes.len() - cut]).is_err());
    }
}

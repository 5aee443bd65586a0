use approx::assert_relative_eq;
use facesketch::gradcheck::relative_error;
use facesketch::image::Image;
use facesketch::io::{decode_obj, encode_obj};
use facesketch::sketch::reflect;
use facesketch::texture::{fuse_texture, tokenize, FusionInputs, TextureEntry, TextureScorer, TokenOverlap};
use facesketch::uv::{UvMap, UvSemantic};
use nalgebra::Vector3;
use proptest::prelude::*;

fn mirrored(mut i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let last = n as isize - 1;
    while i < 0 || i > last {
        i = if i < 0 { -i } else { 2 * last - i };
    }
    i as usize
}

fn color_map(size: usize, values: &[f64]) -> UvMap {
    let mut m = UvMap::new(size, 3, UvSemantic::Color);
    m.values.data.copy_from_slice(values);
    m.validity.fill(1.0);
    m
}

proptest! {
    #[test]
    fn reflect_matches_repeated_mirroring(i in -200isize..200, n in 1usize..40) {
        prop_assert_eq!(reflect(i, n), mirrored(i, n));
    }

    #[test]
    fn fusion_stays_within_its_sources(
        a in prop::collection::vec(0.0f64..1.0, 48),
        b in prop::collection::vec(0.0f64..1.0, 48),
        m in prop::collection::vec(prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0], 16),
    ) {
        let inputs = FusionInputs { a_img: color_map(4, &a), a_pca: color_map(4, &b), m_img: m, fallback: false };
        let fused = fuse_texture(&inputs).unwrap();
        for t in 0..16 {
            prop_assert!((inputs.m_img[t] + inputs.m_pca()[t] - 1.0).abs() <= f64::EPSILON);
            for c in 0..3 {
                let (lo, hi) = (a[3 * t + c].min(b[3 * t + c]), a[3 * t + c].max(b[3 * t + c]));
                prop_assert!((lo..=hi).contains(&fused.texel(t)[c]));
            }
        }
    }

    #[test]
    fn token_overlap_is_a_bounded_similarity(p in "[a-z ]{0,24}", t in prop::collection::vec("[a-z]{1,6}", 0..5)) {
        let entry = TextureEntry { id: "e".into(), image: Image::filled(1, 1, 3, 0.0), tags: t.clone(), embedding: None };
        let s = TokenOverlap.score(&p, &entry);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&s));
        if !t.is_empty() && tokenize(&p) == tokenize(&t.join(" ")) {
            assert_relative_eq!(s, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn obj_round_trips_vertices(coords in prop::collection::vec(-100.0f64..100.0, 9..60)) {
        let vertices: Vec<Vector3<f64>> = coords.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect();
        let triangles = vec![[0u32, 1, 2]];
        let back = decode_obj(&encode_obj(&vertices, &triangles, None, None).unwrap()).unwrap();
        prop_assert_eq!(back.triangles, triangles);
        for (x, y) in back.vertices.iter().zip(&vertices) {
            assert_relative_eq!(x, y, epsilon = 1e-9, max_relative = 1e-12);
        }
    }

    #[test]
    fn uv_maps_round_trip_through_fp32(values in prop::collection::vec(-4.0f32..4.0, 48)) {
        let as_f64: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        let map = color_map(4, &as_f64);
        let mut bytes = Vec::new();
        map.write_raw(&mut bytes).unwrap();
        let back = UvMap::read_raw(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.values.data, map.values.data);
        prop_assert_eq!(back.validity, map.validity);
    }

    #[test]
    fn relative_error_is_symmetric(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        prop_assert_eq!(relative_error(a, b, 1e-9), relative_error(b, a, 1e-9));
        prop_assert!(relative_error(a, b, 1e-9) <= 2.0);
    }
}

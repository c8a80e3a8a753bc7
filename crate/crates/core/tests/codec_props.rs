use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use screenmark::anticrop::{crop_edge, Edge};
use screenmark::codec::{Codec, EmbedConfig};
use screenmark::filter::to_grayscale;
use screenmark::jnd::{jnd_map, JndParams};
use screenmark::metrics::ber;
use screenmark::synth::texture;
use screenmark::{BitString, PAYLOAD_BITS};

const KEY: u64 = 0x5eed_1234_abcd_0001;

fn codec() -> &'static Codec {
    static C: OnceLock<Codec> = OnceLock::new();
    C.get_or_init(|| Codec::new(KEY, EmbedConfig::default()).unwrap())
}

fn payload(seed: u64) -> BitString {
    BitString::random(&mut ChaCha8Rng::seed_from_u64(seed), PAYLOAD_BITS)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn embed_respects_jnd_and_round_trips(id in 0u64..1000, seed in any::<u64>()) {
        let host = texture(id, 512, 512);
        let jnd = jnd_map(&to_grayscale(&host).unwrap(), &JndParams::default()).unwrap();
        let bits = payload(seed);
        let marked = codec().embed(&host, &bits, &jnd).unwrap();
        let eta = codec().config().eta;
        for y in 0..512 {
            for x in 0..512 {
                for c in 1..3 {
                    let d = (marked.get(x, y, c) as f64 - host.get(x, y, c) as f64).abs();
                    prop_assert!(d <= eta * jnd.get(x, y) + 0.5 + 1e-9);
                }
            }
        }
        prop_assert_eq!(codec().extract(&marked).unwrap().bits, bits);
    }

    #[test]
    fn anticrop_survives_single_edge_crops(id in 0u64..1000, seed in any::<u64>(), gamma in 0.05f64..0.4, e in 0usize..4) {
        let host = texture(id, 512, 512);
        let jnd = jnd_map(&to_grayscale(&host).unwrap(), &JndParams::default()).unwrap();
        let bits = payload(seed);
        let marked = codec().embed(&host, &bits, &jnd).unwrap();
        let cropped = crop_edge(&marked, Edge::ALL[e], gamma).unwrap();
        let (x, bounds) = codec().decode_with_anticrop(&cropped).unwrap();
        prop_assert!(!bounds.rects.is_empty());
        prop_assert!(ber(&bits, &x.bits).unwrap() <= 0.05);
    }
}

proptest! {
    #[test]
    fn hex_round_trip(seed in any::<u64>()) {
        let bits = payload(seed);
        let hex = bits.to_hex().unwrap();
        prop_assert_eq!(hex.len(), 32);
        prop_assert_eq!(BitString::from_hex(&hex).unwrap(), bits.clone());
        prop_assert_eq!(BitString::parse_bits(&bits.to_string()).unwrap(), bits);
    }

    #[test]
    fn ber_of_complement_is_one(seed in any::<u64>()) {
        let bits = payload(seed);
        prop_assert_eq!(ber(&bits, &bits).unwrap(), 0.0);
        prop_assert_eq!(ber(&bits, &bits.complement()).unwrap(), 1.0);
    }
}

#[test]
fn wrong_key_decodes_noise() {
    let host = texture(3, 512, 512);
    let jnd = jnd_map(&to_grayscale(&host).unwrap(), &JndParams::default()).unwrap();
    let bits = payload(9);
    let marked = codec().embed(&host, &bits, &jnd).unwrap();
    let other = Codec::new(KEY ^ 1, EmbedConfig::default()).unwrap();
    let b = ber(&bits, &other.extract(&marked).unwrap().bits).unwrap();
    assert!(b > 0.3, "{b}");
}

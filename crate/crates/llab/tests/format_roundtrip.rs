use llab::format::{infer_interval, parse_trace, write_trace, TraceFormat};
use llab_core::{LatencySample, Trace, TraceMetadata};
use proptest::prelude::*;

fn sample() -> impl Strategy<Value = (u64, u64, bool, Option<u64>, Option<u64>, Option<u64>)> {
    (
        1u64..4,
        0u64..3_000_000,
        prop::bool::weighted(0.1),
        prop::option::weighted(0.9, 0u64..200_000_000),
        prop::option::weighted(0.9, 0u64..200_000_000),
        prop::option::weighted(0.9, 0u64..400_000_000),
    )
}

fn trace() -> impl Strategy<Value = Trace> {
    (prop::collection::vec(sample(), 1..200), 0u64..u64::MAX / 4).prop_map(|(rows, start)| {
        let mut seq = 0;
        let mut t = start;
        let samples: Vec<LatencySample> = rows
            .into_iter()
            .map(|(gap, step, lost, ul, dl, rtt)| {
                seq += gap;
                t += step;
                if lost {
                    LatencySample::lost(seq, t)
                } else {
                    LatencySample {
                        seq,
                        t_send: t,
                        ul,
                        dl,
                        rtt,
                        lost: false,
                    }
                }
            })
            .collect();
        let dt = infer_interval(&samples);
        let meta = TraceMetadata::inferred("prop", &samples);
        Trace::new(samples, dt, meta).unwrap()
    })
}

proptest! {
    #[test]
    fn parse_inverts_write(t in trace()) {
        for format in [TraceFormat::Csv, TraceFormat::Jsonl] {
            let mut buf = Vec::new();
            write_trace(&t, format, &mut buf).unwrap();
            let back = parse_trace(buf.as_slice(), format, "prop").unwrap();
            prop_assert_eq!(back.samples(), t.samples());
            prop_assert_eq!(back.dt_nominal(), t.dt_nominal());

            let mut again = Vec::new();
            write_trace(&back, format, &mut again).unwrap();
            prop_assert_eq!(again, buf);
        }
    }
}

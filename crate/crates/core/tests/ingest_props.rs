use chartpulse::ingest::{
    duration_summary, first_life, first_lives, parse_chart_csv, write_chart_csv,
};
use chrono::NaiveDate;
use proptest::prelude::*;

/// Chart CSV with `chart_size` rows on each listed day offset; songs are
/// drawn from a small pool so they recur.
fn chart_csv(day_offsets: &[u32], picks: &[Vec<usize>], streams: &[Vec<u64>]) -> String {
    let start = NaiveDate::from_ymd_opt(2017, 1, 1).unwrap();
    let mut s = String::from("position,track,artist,streams,date\n");
    for ((&off, songs), counts) in day_offsets.iter().zip(picks).zip(streams) {
        let date = start + chrono::Days::new(off as u64);
        for (pos, (&song, &n)) in songs.iter().zip(counts).enumerate() {
            s.push_str(&format!(
                "{},\"Song, {song}\",Artist {},{n},{date}\n",
                pos + 1,
                song % 3
            ));
        }
    }
    s
}

fn dataset_strategy() -> impl Strategy<Value = (u32, String)> {
    (1u32..5, prop::collection::btree_set(0u32..40, 1..25)).prop_flat_map(|(size, offsets)| {
        let days = offsets.len();
        let offsets: Vec<u32> = offsets.into_iter().collect();
        let picks =
            prop::collection::vec(Just((0..12usize).collect::<Vec<_>>()).prop_shuffle(), days);
        let streams =
            prop::collection::vec(prop::collection::vec(0u64..1_000_000, size as usize), days);
        (picks, streams).prop_map(move |(picks, streams)| {
            let picks: Vec<Vec<usize>> = picks
                .into_iter()
                .map(|p| p[..size as usize].to_vec())
                .collect();
            (size, chart_csv(&offsets, &picks, &streams))
        })
    })
}

proptest! {
    #[test]
    fn csv_round_trip((size, raw) in dataset_strategy()) {
        let ds = parse_chart_csv(raw.as_bytes(), size).unwrap().dataset;
        let mut out = Vec::new();
        write_chart_csv(&ds, &mut out).unwrap();
        let again = parse_chart_csv(out.as_slice(), size).unwrap().dataset;
        prop_assert_eq!(&again, &ds);
    }

    #[test]
    fn first_life_bounds((size, raw) in dataset_strategy()) {
        let ds = parse_chart_csv(raw.as_bytes(), size).unwrap().dataset;
        for key in ds.songs() {
            let life = first_life(&ds, key).unwrap();
            let seen = ds.appearances(key).unwrap().len();
            prop_assert!(life >= 1 && life <= seen && seen <= ds.day_count());
        }
        prop_assert_eq!(first_lives(&ds).len(), ds.song_count());
    }

    #[test]
    fn duration_fractions_monotone((size, raw) in dataset_strategy()) {
        let ds = parse_chart_csv(raw.as_bytes(), size).unwrap().dataset;
        let summary = duration_summary(&ds);
        prop_assert!(summary.fractions.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(summary.fractions.iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert_eq!(summary.histogram.values().sum::<usize>(), summary.song_count);
    }
}

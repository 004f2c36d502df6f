use std::fs;

use chartpulse::intensity::{DayGrid, IntensityParams};
use chartpulse::simulation::{simulate, SimConfig, SimMode, Simulated};

use super::Finished;
use crate::args::{SimOutput, SimulateArgs};
use crate::error::CliError;
use crate::load::dataset_id;
use crate::output::{Outputs, Table};

pub fn run(args: &SimulateArgs) -> Result<Finished, CliError> {
    let text =
        fs::read_to_string(&args.params).map_err(|e| CliError::data(args.params.display(), e))?;
    let params: IntensityParams =
        serde_json::from_str(&text).map_err(|e| CliError::data(args.params.display(), e))?;
    let grid = DayGrid::new(args.delta, args.days)
        .map_err(|e| CliError::Usage(format!("invalid day grid: {e}")))?;
    let config = SimConfig {
        grid,
        seed: args.seed,
        mode: match args.mode {
            SimOutput::Counts => SimMode::DailyCounts,
            SimOutput::Events => SimMode::EventTimes,
        },
    };
    let id = dataset_id(&args.params);
    let mut outputs = Outputs::default();
    let (stem, bytes) = match simulate(&params, &config) {
        Simulated::DailyCounts(counts) => {
            // same schema as chart input, one row per day at position 1
            let title = args.title.clone().unwrap_or_else(|| id.clone());
            let mut t = Table::new(&[], &["date", "position", "track", "artist", "streams"]);
            for (i, n) in counts.iter().enumerate() {
                let date = args.start_date + chrono::Days::new(i as u64);
                t.row(&[
                    date.to_string(),
                    "1".into(),
                    title.clone(),
                    args.artist.clone(),
                    n.to_string(),
                ]);
            }
            println!(
                "{} days, {} streams",
                counts.len(),
                counts.iter().sum::<u64>()
            );
            (format!("simulate-counts_{id}"), t.into_bytes())
        }
        Simulated::EventTimes(times) => {
            let mut t = Table::new(&[], &["time"]);
            for x in &times {
                t.row(&[x.to_string()]);
            }
            println!("{} events on [0, {})", times.len(), grid.horizon());
            (format!("simulate-events_{id}"), t.into_bytes())
        }
    };
    outputs.write(args.out_dir.join(format!("{stem}.csv")), &bytes)?;
    Ok(Finished {
        outputs,
        manifest: args.out_dir.join(format!("{stem}.manifest.json")),
    })
}

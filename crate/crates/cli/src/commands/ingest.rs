use chartpulse::cache::write_cache;

use super::Finished;
use crate::args::IngestArgs;
use crate::error::CliError;
use crate::load::load;
use crate::output::Outputs;

pub fn run(args: &IngestArgs) -> Result<Finished, CliError> {
    let loaded = load(&args.dataset)?;
    let ds = &loaded.dataset;
    let days = ds.days();
    println!(
        "{} days, {} songs, {} to {}",
        ds.day_count(),
        ds.song_count(),
        days[0],
        days[days.len() - 1]
    );
    for gap in ds.gaps() {
        println!(
            "gap: {} missing day(s) between {} and {}",
            gap.missing_days, gap.after, gap.before
        );
    }
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }

    let mut bytes = Vec::new();
    write_cache(ds, &mut bytes)?;
    let mut outputs = Outputs::default();
    outputs.write(args.out_dir.join(format!("{}.cpds", loaded.id)), &bytes)?;
    Ok(Finished {
        outputs,
        manifest: args
            .out_dir
            .join(format!("ingest_{}.manifest.json", loaded.id)),
    })
}

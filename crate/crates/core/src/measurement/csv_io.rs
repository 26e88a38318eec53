//! CountTable CSV layout:
//!
//! ```text
//! total_shots,seed,experiment,swap_config,mode,shot_noise
//! 90000,42,local,original,full_joint_36,true
//! projector_id,count
//! R⊗+1,2500
//! ...
//! ```
//!
//! Missing provenance is written as `-`.

use std::io::{Read, Write};
use std::path::Path;

use super::{CountTable, ProjectorMode, Provenance};
use crate::error::{Error, Result};

const META_HEADER: [&str; 6] = [
    "total_shots",
    "seed",
    "experiment",
    "swap_config",
    "mode",
    "shot_noise",
];
const ROW_HEADER: [&str; 2] = ["projector_id", "count"];

impl CountTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record(META_HEADER)?;
        w.write_record([
            self.total_shots.to_string(),
            self.seed.to_string(),
            self.provenance
                .experiment
                .map_or("-".to_string(), |e| e.to_string()),
            self.provenance
                .swap_config
                .map_or("-".to_string(), |c| c.to_string()),
            self.mode.to_string(),
            self.shot_noise.to_string(),
        ])?;
        w.write_record(ROW_HEADER)?;
        for (id, count) in &self.entries {
            w.write_record([id.as_str(), &count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<CountTable> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = r.records();
        let mut next = |what: &str| -> Result<csv::StringRecord> {
            records
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what} row")))?
                .map_err(Error::from)
        };
        let header = next("metadata header")?;
        if header.iter().collect::<Vec<_>>() != META_HEADER {
            return Err(Error::Parse(format!(
                "metadata header must be `{}`",
                META_HEADER.join(",")
            )));
        }
        let meta = next("metadata")?;
        if meta.len() != META_HEADER.len() {
            return Err(Error::Parse("metadata row has the wrong width".into()));
        }
        let int = |s: &str, field: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad {field} `{s}`")))
        };
        let total_shots = int(&meta[0], "total_shots")?;
        let seed = int(&meta[1], "seed")?;
        let experiment = match &meta[2] {
            "-" => None,
            s => Some(s.parse()?),
        };
        let swap_config = match &meta[3] {
            "-" => None,
            s => Some(s.parse()?),
        };
        let mode: ProjectorMode = meta[4].parse()?;
        let shot_noise = meta[5]
            .parse()
            .map_err(|_| Error::Parse(format!("bad shot_noise `{}`", &meta[5])))?;
        let rows = next("count header")?;
        if rows.iter().collect::<Vec<_>>() != ROW_HEADER {
            return Err(Error::Parse(
                "count header must be `projector_id,count`".into(),
            ));
        }
        let mut entries = Vec::new();
        for rec in records {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Parse("count rows need two fields".into()));
            }
            entries.push((rec[0].to_string(), int(&rec[1], "count")?));
        }
        Ok(CountTable {
            mode,
            entries,
            total_shots,
            seed,
            provenance: Provenance {
                experiment,
                swap_config,
            },
            shot_noise,
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<CountTable> {
        CountTable::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{ExperimentKind, SwapConfig};

    fn sample() -> CountTable {
        CountTable {
            mode: ProjectorMode::ConditionalCircular4,
            entries: vec![
                ("R⊗+1".into(), 5000),
                ("R⊗-1".into(), 0),
                ("L⊗+1".into(), 0),
                ("L⊗-1".into(), 5000),
            ],
            total_shots: 10_000,
            seed: 42,
            provenance: Provenance::default(),
            shot_noise: true,
        }
        .with_provenance(ExperimentKind::Local, SwapConfig::TWICE_SWAPPED)
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let text = t.to_csv_string().unwrap();
        assert!(text.starts_with("total_shots,seed,experiment,swap_config,mode,shot_noise\n"));
        assert_eq!(CountTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn round_trip_without_provenance() {
        let mut t = sample();
        t.provenance = Provenance::default();
        let text = t.to_csv_string().unwrap();
        assert_eq!(CountTable::read_csv(text.as_bytes()).unwrap(), t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CountTable::read_csv("".as_bytes()).is_err());
        let text = sample().to_csv_string().unwrap().replace("5000", "-3");
        assert!(CountTable::read_csv(text.as_bytes()).is_err());
    }
}

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const HISTORY_CSV_HEADER: [&str; 6] = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc", "lr"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    /// Learning rate used during this epoch.
    pub lr: f64,
}

/// Per-epoch loss/accuracy curves of an iterative learner.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    /// Epoch whose weights the fitted model carries, when restored by early stopping.
    pub restored_epoch: Option<usize>,
}

impl TrainingHistory {
    pub fn push(&mut self, record: EpochRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.epoch < record.epoch));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(HISTORY_CSV_HEADER)?;
        for r in &self.records {
            out.write_record(&[
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.train_acc.to_string(),
                r.val_loss.to_string(),
                r.val_acc.to_string(),
                r.lr.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads the CSV written by [`TrainingHistory::write_csv`]. The restored
    /// epoch is not part of the CSV.
    pub fn read_csv<R: Read>(reader: R) -> csv::Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut history = TrainingHistory::default();
        for row in rdr.deserialize() {
            history.records.push(row?);
        }
        Ok(history)
    }
}

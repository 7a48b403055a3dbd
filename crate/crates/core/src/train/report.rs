use std::io::Write;

use super::TrainReport;
use crate::error::Result;

/// Loss history as `epoch,train_mse,val_mae_mm_s`, one line per epoch.
pub fn write_report_csv<W: Write>(report: &TrainReport, mut w: W) -> Result<()> {
    writeln!(w, "epoch,train_mse,val_mae_mm_s")?;
    for (i, (loss, val)) in report.train_mse.iter().zip(&report.val_mae_mm_s).enumerate() {
        writeln!(w, "{},{loss},{val}", i + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_line_per_epoch() {
        let r = TrainReport {
            train_mse: vec![0.5, 0.25],
            val_mae_mm_s: vec![1.0, 0.75],
            best_epoch: 2,
            best_validation_mae: 0.75,
            test_mae: None,
            adam_steps: 4,
        };
        let mut buf = Vec::new();
        write_report_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,train_mse,val_mae_mm_s\n1,0.5,1\n2,0.25,0.75\n"
        );
    }
}

//! Feature schema, scaling, splitting, CSV I/O and the synthetic generator.

mod csv_io;
mod record;
mod scaler;
mod split;
mod synth;

pub use csv_io::{header, load_csv, read_records, save_csv, write_records, PPV_COLUMN};
pub use record::{
    hammer_energy, Feature, Features, PileDrivingRecord, SensorDirection, SensorLocation, GRAVITY,
    N_FEATURES,
};
pub use scaler::ScalerParams;
pub use split::{split, split_sizes, DatasetSplit};
pub use synth::{generate_synthetic, GeneratorParams};

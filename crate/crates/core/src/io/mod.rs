//! File formats the toolkit reads and writes: legacy-ASCII VTK for fields
//! and meshes, plain numeric CSV for tables and traces.
//!
//! All writers are deterministic — the same data always produces the same
//! bytes — which is what lets a run manifest promise reproducible outputs.

pub mod csv;
pub mod vtk;

pub use csv::{read_csv, write_csv, write_csv_with_meta, write_field_csv, CsvData};
pub use vtk::{write_polydata, write_structured_points, VtkField};

//! File writers. Data files carry no timestamps, so identical runs give
//! byte-identical output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Names of the files written so far, in order.
    pub fn written(&self) -> &[String] {
        &self.written
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.root.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// CSV with the given header and one record per row.
    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush().map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Whitespace-separated columns under a `#` header; blocks are separated
    /// by a blank line.
    pub fn plotdata(&mut self, name: &str, header: &[&str], blocks: &[Vec<Vec<f64>>]) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "# {}", header.join(" "))?;
            for (k, block) in blocks.iter().enumerate() {
                if k > 0 {
                    writeln!(w)?;
                }
                for row in block {
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(w, "{}", cells.join(" "))?;
                }
            }
            w.flush()
        };
        write().map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    /// Quad mesh on an `rows × cols` vertex grid (row-major), wrapping the
    /// columns when `periodic`.
    pub fn obj(&mut self, name: &str, vertices: &[[f64; 3]], rows: usize, cols: usize, periodic: bool) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "# {rows} x {cols} grid, y up")?;
            for v in vertices {
                writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
            }
            let idx = |i: usize, j: usize| i * cols + j + 1;
            let jmax = if periodic { cols } else { cols - 1 };
            for i in 0..rows.saturating_sub(1) {
                for j in 0..jmax {
                    let k = (j + 1) % cols;
                    writeln!(w, "f {} {} {} {}", idx(i, j), idx(i + 1, j), idx(i + 1, k), idx(i, k))?;
                }
            }
            w.flush()
        };
        write().map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }
}

/// Shortest round-trip text for a float, empty for `None`.
pub fn num(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

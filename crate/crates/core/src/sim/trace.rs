use std::io::Write;

use crate::error::{Error, Result};

/// Event log, one CSV line per processed event.
pub struct Trace {
    out: Box<dyn Write + Send>,
}

impl Trace {
    pub fn new(mut out: Box<dyn Write + Send>) -> Result<Self> {
        writeln!(out, "time,kind,station,outcome").map_err(out_err)?;
        Ok(Trace { out })
    }

    pub fn line(&mut self, time: f64, kind: &str, station: Option<u32>, outcome: &str) -> Result<()> {
        match station {
            Some(s) => writeln!(self.out, "{time:.9},{kind},{s},{outcome}"),
            None => writeln!(self.out, "{time:.9},{kind},,{outcome}"),
        }
        .map_err(out_err)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(out_err)
    }
}

fn out_err(e: std::io::Error) -> Error {
    Error::Output(format!("trace: {e}"))
}

use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::CliError;

/// Writes through a temporary file in the target directory, then renames it
/// over `path`. Without a path the output goes to stdout.
pub fn write_output(path: Option<&str>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).and_then(|_| lock.flush()).map_err(|e| io_error("stdout", e))
        }
        Some(path) => write_atomic(Path::new(path), body),
    }
}

pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let shown = path.display().to_string();
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(&shown, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).and_then(|_| w.flush()).map_err(|e| io_error(&shown, e))?;
    }
    tmp.persist(path).map_err(|e| io_error(&shown, e.error))?;
    Ok(())
}

fn io_error(what: &str, e: io::Error) -> CliError {
    CliError::Config(format!("cannot write {what}: {e}"))
}

//! Atomic file output: write to a temp file in the target directory, then
//! rename. A failed run never leaves a partial output file behind.

use std::fs;
use std::io;
use std::path::Path;

pub fn write_atomic(path: &Path, content: &str) -> io::Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    fs::create_dir_all(&parent)?;
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?
        .to_string_lossy()
        .into_owned();
    let tmp = parent.join(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, content)?;
    match fs::rename(&tmp, path) {
        Ok(()) => Ok(()),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_and_creates_parents() {
        let dir = std::env::temp_dir().join(format!("pigou-atomic-{}", std::process::id()));
        let path = dir.join("nested/report.json");
        write_atomic(&path, "hello").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "hello");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn failure_leaves_no_partial_file() {
        let dir = std::env::temp_dir().join(format!("pigou-atomic2-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let blocker = dir.join("blocker");
        fs::write(&blocker, "i am a file").unwrap();
        // parent path is a regular file: the write must fail cleanly
        let target = blocker.join("report.json");
        assert!(write_atomic(&target, "data").is_err());
        assert!(!target.exists());
        assert_eq!(fs::read_to_string(&blocker).unwrap(), "i am a file");
        fs::remove_dir_all(&dir).unwrap();
    }
}

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use super::backend::{Device, TransferEngine};
use super::{format, CheckpointPayload};
use crate::error::{Error, Result};
use crate::schedule::StepIndex;

/// One `ckpt_<step>.bin` file per key in a scratch directory.
#[derive(Debug)]
pub struct FileDevice {
    dir: PathBuf,
}

impl FileDevice {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(FileDevice { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: StepIndex) -> PathBuf {
        self.dir.join(format!("ckpt_{}.bin", key.0))
    }
}

impl Device for FileDevice {
    fn write(&self, payload: &CheckpointPayload) -> Result<()> {
        let path = self.path_for(payload.step);
        let tmp = path.with_extension("bin.tmp");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&format::encode(payload))?;
        file.flush()?;
        drop(file);
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    fn read(&self, key: StepIndex) -> Result<CheckpointPayload> {
        let path = self.path_for(key);
        let data = match fs::read(&path) {
            Ok(data) => data,
            Err(e) if e.kind() == ErrorKind::NotFound => return Err(Error::MissingKey(key.0)),
            Err(e) => return Err(e.into()),
        };
        let payload = format::decode(&data).map_err(|reason| Error::ChecksumMismatch { path: path.clone(), reason })?;
        if payload.step != key {
            return Err(Error::ChecksumMismatch {
                path,
                reason: format!("file holds step {}", payload.step),
            });
        }
        Ok(payload)
    }

    fn contains(&self, key: StepIndex) -> bool {
        self.path_for(key).is_file()
    }
}

pub fn file_backend(dir: impl Into<PathBuf>) -> Result<TransferEngine<FileDevice>> {
    Ok(TransferEngine::new(FileDevice::new(dir)?))
}

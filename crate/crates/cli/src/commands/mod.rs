pub(crate) mod comply;
pub(crate) mod enhance;
pub(crate) mod evaluate;
pub(crate) mod generate;
pub(crate) mod train;

use std::path::PathBuf;

use crate::args::{required, Common};
use crate::failure::Failure;

pub(crate) fn out_dir(common: &Common) -> Result<PathBuf, Failure> {
    let dir = required(&common.out, "out")?;
    crate::media::create_dir(&dir)?;
    Ok(dir)
}

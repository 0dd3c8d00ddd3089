use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::problem::{
    load_matrix_market, nine_point_laplacian, synthetic_problem, LeastSquaresProblem, SyntheticSpec,
};

/// Published parameter set for one dataset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableParams {
    pub gd_delta: f64,
    /// `(δ, η)`
    pub nag: (f64, f64),
    /// `(δ, η)`
    pub hbm: (f64, f64),
    /// `(γ, η)`
    pub apc: (f64, f64),
    /// `(α, δ)`
    pub ipg: (f64, f64),
}

/// A matrix from the SuiteSparse collection used in the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetInfo {
    pub name: &'static str,
    pub group: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub complex: bool,
    pub table: TableParams,
    /// Upper end of the default uniform noise for BFGS.
    pub bfgs_noise_hi: f64,
}

impl DatasetInfo {
    pub fn url(&self) -> String {
        format!(
            "https://sparse.tamu.edu/MM/{}/{}.tar.gz",
            self.group, self.name
        )
    }
}

pub const DATASETS: [DatasetInfo; 4] = [
    DatasetInfo {
        name: "ash608",
        group: "HB",
        rows: 608,
        cols: 188,
        complex: false,
        table: TableParams {
            gd_delta: 0.1163,
            nag: (0.08, 0.5),
            hbm: (0.15, 0.29),
            apc: (1.02, 5.27),
            ipg: (0.1163, 1.0),
        },
        bfgs_noise_hi: 5e-6,
    },
    DatasetInfo {
        name: "bcsstm07",
        group: "HB",
        rows: 420,
        cols: 420,
        complex: false,
        table: TableParams {
            gd_delta: 3e-7,
            nag: (2e-7, 0.99),
            hbm: (1e-7, 0.99),
            apc: (1.09, 12.8),
            ipg: (3e-7, 1.0),
        },
        bfgs_noise_hi: 2e-6,
    },
    DatasetInfo {
        name: "gr_30_30",
        group: "HB",
        rows: 900,
        cols: 900,
        complex: false,
        table: TableParams {
            gd_delta: 0.014,
            nag: (0.009, 0.99),
            hbm: (0.03, 0.98),
            apc: (1.09, 12.8),
            ipg: (0.014, 1.0),
        },
        bfgs_noise_hi: 2e-6,
    },
    DatasetInfo {
        name: "qc324",
        group: "Bai",
        rows: 324,
        cols: 324,
        complex: true,
        table: TableParams {
            gd_delta: 0.85,
            nag: (0.57, 0.99),
            hbm: (0.03, 0.98),
            apc: (1.05, 18.9),
            ipg: (0.85, 1.0),
        },
        bfgs_noise_hi: 2e-6,
    },
];

pub fn dataset_info(name: &str) -> Option<&'static DatasetInfo> {
    DATASETS.iter().find(|d| d.name.eq_ignore_ascii_case(name))
}

/// Where a problem comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic(SyntheticSpec),
    /// `gr_30_30` rebuilt from its stencil when no file is available.
    Stencil {
        name: &'static str,
        grid: usize,
    },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::File(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            DatasetSource::Synthetic(s) => s.label(),
            DatasetSource::Stencil { name, .. } => name.to_string(),
        }
    }

    pub fn info(&self) -> Option<&'static DatasetInfo> {
        dataset_info(&self.name())
    }
}

/// Directory searched for downloaded matrices: `$IPGD_DATA` or `./data`.
pub fn data_dir() -> PathBuf {
    std::env::var_os("IPGD_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Resolves `--dataset`: an existing file, or a collection name looked up
/// under `dir` (as `NAME.mtx` or `NAME/NAME.mtx`).
pub fn resolve_dataset(spec: &str, dir: &Path) -> Result<DatasetSource> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(DatasetSource::File(path.to_path_buf()));
    }
    let stem = spec.strip_suffix(".mtx").unwrap_or(spec);
    let Some(info) = dataset_info(stem) else {
        return Err(Error::Config(format!(
            "dataset `{spec}` is neither a file nor a known collection name"
        )));
    };
    if let Some(found) = find_local(info.name, dir) {
        return Ok(DatasetSource::File(found));
    }
    if info.name == "gr_30_30" {
        return Ok(DatasetSource::Stencil {
            name: info.name,
            grid: 30,
        });
    }
    Err(Error::Config(format!(
        "dataset `{}` not found under {}; run `ipgd fetch {}` first",
        info.name,
        dir.display(),
        info.name
    )))
}

fn find_local(name: &str, dir: &Path) -> Option<PathBuf> {
    [
        dir.join(format!("{name}.mtx")),
        dir.join(name).join(format!("{name}.mtx")),
    ]
    .into_iter()
    .find(|p| p.is_file())
}

/// Loads the problem with `B = A·1`, so `x* = 1`.
pub fn load_dataset(src: &DatasetSource) -> Result<LeastSquaresProblem> {
    match src {
        DatasetSource::File(p) => {
            let a = load_matrix_market(p)?;
            if let Some(info) = src.info() {
                if a.shape() != (info.rows, info.cols) {
                    return Err(Error::Config(format!(
                        "{} is {}x{}, expected {}x{}",
                        p.display(),
                        a.rows(),
                        a.cols(),
                        info.rows,
                        info.cols
                    )));
                }
            }
            Ok(LeastSquaresProblem::with_ones_solution(src.name(), a))
        }
        DatasetSource::Synthetic(spec) => synthetic_problem(spec),
        DatasetSource::Stencil { name, grid } => Ok(LeastSquaresProblem::with_ones_solution(
            *name,
            nine_point_laplacian(*grid),
        )),
    }
}

/// Downloads a collection matrix into `dir/NAME.mtx` and checks its shape.
pub fn fetch_dataset(name: &str, dir: &Path) -> Result<PathBuf> {
    let info =
        dataset_info(name).ok_or_else(|| Error::Fetch(format!("unknown dataset `{name}`")))?;
    fs::create_dir_all(dir)?;
    let target = dir.join(format!("{}.mtx", info.name));
    let url = info.url();
    let resp = ureq::get(&url)
        .call()
        .map_err(|e| Error::Fetch(format!("{url}: {e}")))?;
    let mut archive =
        tar::Archive::new(flate2::read::GzDecoder::new(resp.into_body().into_reader()));
    let wanted = format!("{}.mtx", info.name);
    let mut text = None;
    for entry in archive
        .entries()
        .map_err(|e| Error::Fetch(format!("{url}: {e}")))?
    {
        let mut entry = entry.map_err(|e| Error::Fetch(format!("{url}: {e}")))?;
        let path = entry
            .path()
            .map_err(|e| Error::Fetch(e.to_string()))?
            .into_owned();
        if path.file_name().is_some_and(|f| f == wanted.as_str()) {
            let mut s = String::new();
            entry.read_to_string(&mut s)?;
            text = Some(s);
            break;
        }
    }
    let text = text.ok_or_else(|| Error::Fetch(format!("{url}: archive has no {wanted}")))?;
    let partial = dir.join(format!("{}.mtx.part", info.name));
    fs::write(&partial, &text)?;
    let (rows, cols) =
        mtx_shape(&text).ok_or_else(|| Error::Fetch(format!("{wanted}: unreadable size line")))?;
    if (rows, cols) != (info.rows, info.cols) {
        let _ = fs::remove_file(&partial);
        return Err(Error::Fetch(format!(
            "{wanted} is {rows}x{cols}, expected {}x{}",
            info.rows, info.cols
        )));
    }
    fs::rename(&partial, &target)?;
    Ok(target)
}

/// Row and column counts from a Matrix Market size line.
fn mtx_shape(text: &str) -> Option<(usize, usize)> {
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('%'))?;
    let mut it = line.split_whitespace().map(|t| t.parse::<usize>());
    Some((it.next()?.ok()?, it.next()?.ok()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_urls() {
        assert_eq!(dataset_info("GR_30_30").unwrap().cols, 900);
        assert_eq!(
            dataset_info("qc324").unwrap().url(),
            "https://sparse.tamu.edu/MM/Bai/qc324.tar.gz"
        );
        assert!(dataset_info("nope").is_none());
    }

    #[test]
    fn resolution() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            resolve_dataset("gr_30_30", dir.path()).unwrap(),
            DatasetSource::Stencil {
                name: "gr_30_30",
                grid: 30
            }
        );
        assert!(matches!(
            resolve_dataset("ash608", dir.path()),
            Err(Error::Config(_))
        ));
        assert!(resolve_dataset("what", dir.path()).is_err());

        fs::create_dir(dir.path().join("ash608")).unwrap();
        let p = dir.path().join("ash608").join("ash608.mtx");
        fs::write(
            &p,
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n",
        )
        .unwrap();
        let src = resolve_dataset("ash608.mtx", dir.path()).unwrap();
        assert_eq!(src, DatasetSource::File(p));
        // Wrong shape for the named dataset.
        assert!(load_dataset(&src).is_err());
    }

    #[test]
    fn size_line() {
        assert_eq!(
            mtx_shape("%%MatrixMarket x\n% c\n\n 608 188 1216\n"),
            Some((608, 188))
        );
        assert_eq!(mtx_shape("%only comments\n"), None);
    }
}

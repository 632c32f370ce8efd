//! Download-and-cache plumbing for SuiteSparse matrices.
//!
//! Matrices are fetched as `<base-url>/MM/<group>/<name>.tar.gz` archives,
//! unpacked, and cached as `<cache>/<group>/<name>.mtx`. A cache hit skips
//! the network entirely, so only the first run of a given matrix needs
//! connectivity. Concurrent fetches of the same file serialize through a
//! `.lock` file next to the cache entry.
//!
//! The HTTP layer sits behind the [`Transport`] trait so tests can substitute
//! a canned in-memory archive and observe exactly when the network would be
//! touched.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use flate2::read::GzDecoder;
use tar::Archive;

/// Default download host. Only a default: every caller takes the base URL as
/// a parameter (`--base-url` on the command line), since the collection's
/// hosting has moved before.
pub const DEFAULT_BASE_URL: &str = "https://suitesparse-collection-website.herokuapp.com";

/// How long a fetch waits for a concurrent fetch of the same file to finish.
const LOCK_WAIT: Duration = Duration::from_secs(120);

/// Ways acquiring a matrix can fail.
#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    /// The server answered with a non-success status.
    #[error("HTTP {status} fetching {url}")]
    Http { status: u16, url: String },
    /// The request never completed (DNS, connect, read, or timeout trouble).
    #[error("network error fetching {url}: {message}")]
    Network { url: String, message: String },
    /// The archive was not valid gzip/tar or held no `.mtx` member.
    #[error("bad archive for {name}: {reason}")]
    Archive { name: String, reason: String },
    /// Filesystem trouble in the cache directory.
    #[error("cache I/O error: {0}")]
    Io(#[from] std::io::Error),
    /// Another process held the cache lock for longer than the wait budget.
    #[error("timed out waiting for lock file {0}")]
    LockTimeout(PathBuf),
}

/// Minimal HTTP GET abstraction; the real implementation is [`HttpTransport`],
/// tests inject stubs.
pub trait Transport: Send + Sync {
    /// Fetches the body at `url`, following redirects.
    fn get(&self, url: &str) -> Result<Vec<u8>, FetchError>;
}

/// [`Transport`] over a blocking HTTP client.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Self {
        let client = reqwest::blocking::Client::builder()
            .connect_timeout(Duration::from_secs(30))
            .timeout(Duration::from_secs(600))
            .build()
            .expect("HTTP client construction cannot fail with static options");
        HttpTransport { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>, FetchError> {
        let response = self
            .client
            .get(url)
            .send()
            .map_err(|e| FetchError::Network {
                url: url.to_string(),
                message: e.to_string(),
            })?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Http {
                status: status.as_u16(),
                url: url.to_string(),
            });
        }
        let mut body = Vec::new();
        response
            .take(1 << 31)
            .read_to_end(&mut body)
            .map_err(|e| FetchError::Network {
                url: url.to_string(),
                message: e.to_string(),
            })?;
        Ok(body)
    }
}

/// Where the matrix cache lives: explicit flag, then `ADKRYLOV_CACHE`, then
/// the platform cache directory (`$XDG_CACHE_HOME` or `~/.cache`) plus an
/// `adkrylov` component, then `./.adkrylov-cache` as a last resort.
pub fn resolve_cache_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(dir) = flag {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os("ADKRYLOV_CACHE") {
        return PathBuf::from(dir);
    }
    if let Some(xdg) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(xdg).join("adkrylov");
    }
    if let Some(home) = std::env::var_os("HOME") {
        return PathBuf::from(home).join(".cache").join("adkrylov");
    }
    PathBuf::from(".adkrylov-cache")
}

/// What [`fetch_matrix`] did and where the file ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchOutcome {
    /// Location of the cached `.mtx` file.
    pub path: PathBuf,
    /// True if the file was already cached and no network request was made.
    pub from_cache: bool,
    /// True if a forced re-download replaced a cached file with different
    /// bytes — worth a warning, since it means the upstream file changed.
    pub replaced_differing_file: bool,
}

/// Removes the lock file when the fetch finishes, even on error paths.
struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn acquire_lock(path: &Path) -> Result<LockGuard, FetchError> {
    let start = Instant::now();
    loop {
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(path)
        {
            Ok(_) => return Ok(LockGuard(path.to_path_buf())),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                if start.elapsed() > LOCK_WAIT {
                    return Err(FetchError::LockTimeout(path.to_path_buf()));
                }
                std::thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Pulls the `.mtx` member out of a gzipped tar archive. SuiteSparse archives
/// hold `<name>/<name>.mtx` (plus auxiliary files for some matrices); an
/// entry whose file name is exactly `<name>.mtx` wins, otherwise the first
/// `.mtx` member is taken.
fn extract_mtx(archive_bytes: &[u8], name: &str) -> Result<Vec<u8>, FetchError> {
    let bad = |reason: String| FetchError::Archive {
        name: name.to_string(),
        reason,
    };
    let mut fallback: Option<Vec<u8>> = None;
    let mut archive = Archive::new(GzDecoder::new(archive_bytes));
    for entry in archive.entries().map_err(|e| bad(e.to_string()))? {
        let mut entry = entry.map_err(|e| bad(e.to_string()))?;
        let path = entry.path().map_err(|e| bad(e.to_string()))?.into_owned();
        if path.extension().is_some_and(|ext| ext == "mtx") {
            let mut bytes = Vec::new();
            entry
                .read_to_end(&mut bytes)
                .map_err(|e| bad(e.to_string()))?;
            let exact = path
                .file_stem()
                .is_some_and(|stem| stem == std::ffi::OsStr::new(name));
            if exact {
                return Ok(bytes);
            }
            fallback.get_or_insert(bytes);
        }
    }
    fallback.ok_or_else(|| bad("archive contains no .mtx member".to_string()))
}

/// Ensures `<cache_dir>/<group>/<name>.mtx` exists and returns its path.
///
/// A cached file short-circuits before any network or lock activity unless
/// `force` is set, in which case the archive is re-downloaded and the cached
/// bytes replaced (reporting whether they differed).
pub fn fetch_matrix(
    transport: &dyn Transport,
    base_url: &str,
    group: &str,
    name: &str,
    cache_dir: &Path,
    force: bool,
) -> Result<FetchOutcome, FetchError> {
    let group_dir = cache_dir.join(group);
    let mtx_path = group_dir.join(format!("{name}.mtx"));

    if !force && mtx_path.is_file() {
        return Ok(FetchOutcome {
            path: mtx_path,
            from_cache: true,
            replaced_differing_file: false,
        });
    }

    fs::create_dir_all(&group_dir)?;
    let _lock = acquire_lock(&group_dir.join(format!("{name}.mtx.lock")))?;

    // Another process may have completed the download while this one waited
    // on the lock.
    if !force && mtx_path.is_file() {
        return Ok(FetchOutcome {
            path: mtx_path,
            from_cache: true,
            replaced_differing_file: false,
        });
    }

    let url = format!(
        "{}/MM/{group}/{name}.tar.gz",
        base_url.trim_end_matches('/')
    );
    let archive = transport.get(&url)?;
    let mtx = extract_mtx(&archive, name)?;

    let replaced_differing_file = match fs::read(&mtx_path) {
        Ok(existing) => existing != mtx,
        Err(_) => false,
    };

    let part = group_dir.join(format!("{name}.mtx.part"));
    fs::write(&part, &mtx)?;
    fs::rename(&part, &mtx_path)?;

    Ok(FetchOutcome {
        path: mtx_path,
        from_cache: false,
        replaced_differing_file,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use flate2::write::GzEncoder;
    use flate2::Compression;
    use std::sync::atomic::{AtomicUsize, Ordering};

    /// Serves canned archives and counts how often the network is touched.
    struct StubTransport {
        body: Vec<u8>,
        calls: AtomicUsize,
    }

    impl StubTransport {
        fn new(body: Vec<u8>) -> Self {
            StubTransport {
                body,
                calls: AtomicUsize::new(0),
            }
        }

        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl Transport for StubTransport {
        fn get(&self, _url: &str) -> Result<Vec<u8>, FetchError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(self.body.clone())
        }
    }

    struct FailingTransport;

    impl Transport for FailingTransport {
        fn get(&self, url: &str) -> Result<Vec<u8>, FetchError> {
            Err(FetchError::Http {
                status: 404,
                url: url.to_string(),
            })
        }
    }

    fn tar_gz(members: &[(&str, &[u8])]) -> Vec<u8> {
        let mut builder = tar::Builder::new(GzEncoder::new(Vec::new(), Compression::default()));
        for (path, bytes) in members {
            let mut header = tar::Header::new_gnu();
            header.set_size(bytes.len() as u64);
            header.set_mode(0o644);
            header.set_cksum();
            builder.append_data(&mut header, path, *bytes).unwrap();
        }
        builder.into_inner().unwrap().finish().unwrap()
    }

    const TINY_MTX: &[u8] =
        b"%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n";

    #[test]
    fn downloads_extracts_and_caches() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubTransport::new(tar_gz(&[("demo/demo.mtx", TINY_MTX)]));
        let out = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();
        assert!(!out.from_cache);
        assert_eq!(out.path, dir.path().join("Bai").join("demo.mtx"));
        assert_eq!(fs::read(&out.path).unwrap(), TINY_MTX);
        assert_eq!(stub.calls(), 1);
        // Lock file must not linger.
        assert!(!dir.path().join("Bai").join("demo.mtx.lock").exists());
    }

    #[test]
    fn second_fetch_hits_cache_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubTransport::new(tar_gz(&[("demo/demo.mtx", TINY_MTX)]));
        fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();
        let out = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();
        assert!(out.from_cache);
        assert_eq!(stub.calls(), 1, "cache hit must not touch the network");
    }

    #[test]
    fn picks_the_exact_name_among_multiple_members() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubTransport::new(tar_gz(&[
            ("demo/demo_b.mtx", b"wrong".as_slice()),
            ("demo/demo.mtx", TINY_MTX),
        ]));
        let out = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();
        assert_eq!(fs::read(&out.path).unwrap(), TINY_MTX);
    }

    #[test]
    fn archive_without_mtx_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubTransport::new(tar_gz(&[("demo/readme.txt", b"hello".as_slice())]));
        let err = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap_err();
        assert!(matches!(err, FetchError::Archive { .. }), "{err}");
    }

    #[test]
    fn http_failure_propagates_with_status() {
        let dir = tempfile::tempdir().unwrap();
        let err = fetch_matrix(
            &FailingTransport,
            "http://x",
            "Bai",
            "no_such_matrix",
            dir.path(),
            false,
        )
        .unwrap_err();
        match err {
            FetchError::Http { status, url } => {
                assert_eq!(status, 404);
                assert!(url.ends_with("/MM/Bai/no_such_matrix.tar.gz"), "{url}");
            }
            other => panic!("expected HTTP error, got {other}"),
        }
    }

    #[test]
    fn force_redownload_reports_changed_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let stub = StubTransport::new(tar_gz(&[("demo/demo.mtx", TINY_MTX)]));
        fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();

        // Same bytes: no conflict.
        let out = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), true).unwrap();
        assert!(!out.from_cache);
        assert!(!out.replaced_differing_file);

        // Upstream "changed": conflict reported, file replaced.
        let changed = StubTransport::new(tar_gz(&[(
            "demo/demo.mtx",
            b"%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.0\n".as_slice(),
        )]));
        let out = fetch_matrix(&changed, "http://x", "Bai", "demo", dir.path(), true).unwrap();
        assert!(out.replaced_differing_file);
        assert_ne!(fs::read(&out.path).unwrap(), TINY_MTX);
    }

    #[test]
    fn stale_lock_times_out_rather_than_hanging_forever() {
        // Shrunk-scale check of the wait loop: create the lock by hand and
        // verify a fetch attempt blocks on it (we only probe briefly, then
        // release and let the fetch finish).
        let dir = tempfile::tempdir().unwrap();
        let group_dir = dir.path().join("Bai");
        fs::create_dir_all(&group_dir).unwrap();
        let lock = group_dir.join("demo.mtx.lock");
        fs::write(&lock, b"held").unwrap();

        let stub = StubTransport::new(tar_gz(&[("demo/demo.mtx", TINY_MTX)]));
        let started = Instant::now();
        let lock_clone = lock.clone();
        let releaser = std::thread::spawn(move || {
            std::thread::sleep(Duration::from_millis(300));
            fs::remove_file(&lock_clone).unwrap();
        });
        let out = fetch_matrix(&stub, "http://x", "Bai", "demo", dir.path(), false).unwrap();
        releaser.join().unwrap();
        assert!(started.elapsed() >= Duration::from_millis(250));
        assert!(out.path.is_file());
    }

    #[test]
    fn cache_dir_resolution_prefers_flag_then_env() {
        let flagged = resolve_cache_dir(Some(Path::new("/tmp/explicit")));
        assert_eq!(flagged, Path::new("/tmp/explicit"));
        // The env fallback is environment-dependent; just pin down that some
        // absolute default comes back without a flag.
        let fallback = resolve_cache_dir(None);
        assert!(!fallback.as_os_str().is_empty());
    }
}

//! The bundled matrix manifest: the 65 nonsymmetric Bai-group matrices from
//! the SuiteSparse collection that the benchmark grid runs over.
//!
//! Shipping a manifest (name + dimensions) instead of the matrix files keeps
//! the crate small and license-clean; [`crate::fetch`] downloads and caches
//! the actual data on demand. Entries are ordered by their collection id.

/// One matrix the benchmark knows about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixManifestEntry {
    /// Matrix name, as used in the collection URL and the cache path.
    pub name: &'static str,
    /// Collection group the matrix belongs to.
    pub group: &'static str,
    /// Number of rows.
    pub rows: usize,
    /// Number of columns.
    pub cols: usize,
    /// Number of stored entries.
    pub nonzeros: usize,
}

const fn bai(name: &'static str, rows: usize, cols: usize, nonzeros: usize) -> MatrixManifestEntry {
    MatrixManifestEntry {
        name,
        group: "Bai",
        rows,
        cols,
        nonzeros,
    }
}

/// Every matrix in the benchmark set.
pub const MANIFEST: [MatrixManifestEntry; 65] = [
    bai("bfwa398", 398, 398, 3_678),
    bai("bfwa62", 62, 62, 450),
    bai("bfwa782", 782, 782, 7_514),
    bai("bwm200", 200, 200, 796),
    bai("bwm2000", 2_000, 2_000, 7_996),
    bai("cdde1", 961, 961, 4_681),
    bai("cdde2", 961, 961, 4_681),
    bai("cdde3", 961, 961, 4_681),
    bai("cdde4", 961, 961, 4_681),
    bai("cdde5", 961, 961, 4_681),
    bai("cdde6", 961, 961, 4_681),
    bai("ck104", 104, 104, 992),
    bai("ck400", 400, 400, 2_860),
    bai("ck656", 656, 656, 3_884),
    bai("dw1024", 2_048, 2_048, 10_114),
    bai("dw256A", 512, 512, 2_480),
    bai("dw256B", 512, 512, 2_500),
    bai("dw4096", 8_192, 8_192, 41_746),
    bai("lop163", 163, 163, 935),
    bai("mhda416", 416, 416, 8_562),
    bai("odepa400", 400, 400, 1_201),
    bai("olm100", 100, 100, 396),
    bai("olm1000", 1_000, 1_000, 3_996),
    bai("olm2000", 2_000, 2_000, 7_996),
    bai("olm500", 500, 500, 1_996),
    bai("olm5000", 5_000, 5_000, 19_996),
    bai("pde225", 225, 225, 1_065),
    bai("pde2961", 2_961, 2_961, 14_585),
    bai("pde900", 900, 900, 4_380),
    bai("qh882", 882, 882, 3_354),
    bai("rbsa480", 480, 480, 17_088),
    bai("rbsb480", 480, 480, 17_088),
    bai("rdb2048", 2_048, 2_048, 12_032),
    bai("rdb5000", 5_000, 5_000, 29_600),
    bai("rdb968", 968, 968, 5_632),
    bai("rw136", 136, 136, 479),
    bai("rw496", 496, 496, 1_859),
    bai("rw5151", 5_151, 5_151, 20_199),
    bai("tub100", 100, 100, 396),
    bai("tub1000", 1_000, 1_000, 3_996),
    bai("cryg10000", 10_000, 10_000, 49_699),
    bai("cryg2500", 2_500, 2_500, 12_349),
    bai("dw2048", 2_048, 2_048, 10_114),
    bai("dw8192", 8_192, 8_192, 41_746),
    bai("dwa512", 512, 512, 2_480),
    bai("dwb512", 512, 512, 2_500),
    bai("mhd1280a", 1_280, 1_280, 47_906),
    bai("mhd3200a", 3_200, 3_200, 68_026),
    bai("mhd4800a", 4_800, 4_800, 102_252),
    bai("qh1484", 1_484, 1_484, 6_110),
    bai("qh768", 768, 768, 2_934),
    bai("rdb1250", 1_250, 1_250, 7_300),
    bai("rdb1250l", 1_250, 1_250, 7_300),
    bai("rdb200", 200, 200, 1_120),
    bai("rdb200l", 200, 200, 1_120),
    bai("rdb2048_noL", 2_048, 2_048, 12_032),
    bai("rdb3200l", 3_200, 3_200, 18_880),
    bai("rdb450", 450, 450, 2_580),
    bai("rdb450l", 450, 450, 2_580),
    bai("rdb800l", 800, 800, 4_640),
    bai("tols1090", 1_090, 1_090, 3_546),
    bai("tols2000", 2_000, 2_000, 5_184),
    bai("tols340", 340, 340, 2_196),
    bai("tols4000", 4_000, 4_000, 8_784),
    bai("tols90", 90, 90, 1_746),
];

/// Looks a matrix up by name.
pub fn find(name: &str) -> Option<&'static MatrixManifestEntry> {
    MANIFEST.iter().find(|e| e.name == name)
}

/// All manifest entries with `rows ≤ max_dim` (the benchmark's working
/// subset; the larger matrices are listed for completeness but make the
/// default grid impractically slow).
pub fn filtered(max_dim: usize) -> impl Iterator<Item = &'static MatrixManifestEntry> {
    MANIFEST.iter().filter(move |e| e.rows <= max_dim)
}

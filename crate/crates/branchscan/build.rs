fn main() {
    // LAPACK routines (zheev/zgesdd) come from the system OpenBLAS, which
    // bundles the full LAPACK symbol set on this platform.
    println!("cargo:rustc-link-lib=dylib=openblas");
}

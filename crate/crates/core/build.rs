fn main() {
    // Reference LAPACK and BLAS rather than the system OpenBLAS, whose
    // AVX-512 kernels return wrong SVD factors on some CPUs.
    for dir in ["lapack", "blas"] {
        println!("cargo:rustc-link-search=native=/usr/lib/x86_64-linux-gnu/{dir}");
    }
    println!("cargo:rustc-link-lib=static=lapack");
    println!("cargo:rustc-link-lib=static=blas");
    println!("cargo:rustc-link-lib=dylib=gfortran");
    println!("cargo:rerun-if-changed=build.rs");
}

use std::fmt::Write;

use super::{Direction, KernelSpec, KernelVariant, VariantError};

/// A standalone C program that allocates the kernel's arrays, times one call
/// with the monotonic clock and prints `KERNEL_TIME_US=<microseconds>`.
///
/// GPU variants without map clauses expect their data to be resident, so the
/// harness moves it with `target enter/exit data` outside the timed region.
pub fn harness_source(spec: &KernelSpec, variant: &KernelVariant) -> Result<String, VariantError> {
    let mut s = String::new();
    s.push_str("#define _POSIX_C_SOURCE 199309L\n#include <math.h>\n#include <stdio.h>\n#include <stdlib.h>\n#include <time.h>\n\n");
    s.push_str(&variant.source);
    s.push_str("\nint main(void) {\n");
    for p in &spec.size_params {
        let v = variant.params.sizes.get(p).ok_or_else(|| VariantError::MissingSize(p.clone()))?;
        writeln!(s, "  int {p} = {v};").unwrap();
    }
    for a in &spec.data_arrays {
        writeln!(s, "  {t} *{n} = malloc(sizeof({t}) * ({e}));", t = a.element_type, n = a.name, e = a.extent).unwrap();
        writeln!(
            s,
            "  for (long q = 0; q < (long)({e}); q++) {n}[q] = (({t})(q % 17) + 1.0) / 17.0;",
            e = a.extent,
            n = a.name,
            t = a.element_type
        )
        .unwrap();
    }
    let resident = variant.kind.is_gpu() && !variant.kind.maps_data();
    let section = |dirs: &[Direction]| -> Vec<String> {
        spec.data_arrays
            .iter()
            .filter(|a| dirs.contains(&a.direction))
            .map(|a| format!("{}[0:{}]", a.name, a.extent))
            .collect()
    };
    if resident {
        let to = section(&[Direction::To, Direction::ToFrom]);
        let alloc = section(&[Direction::From]);
        if !to.is_empty() {
            writeln!(s, "#pragma omp target enter data map(to: {})", to.join(", ")).unwrap();
        }
        if !alloc.is_empty() {
            writeln!(s, "#pragma omp target enter data map(alloc: {})", alloc.join(", ")).unwrap();
        }
    }
    let args = spec.parameters()?.join(", ");
    s.push_str("  struct timespec t0, t1;\n  clock_gettime(CLOCK_MONOTONIC, &t0);\n");
    writeln!(s, "  {}({args});", spec.kernel_name).unwrap();
    s.push_str("  clock_gettime(CLOCK_MONOTONIC, &t1);\n");
    if resident {
        let from = section(&[Direction::From, Direction::ToFrom]);
        let release = section(&[Direction::To]);
        if !from.is_empty() {
            writeln!(s, "#pragma omp target exit data map(from: {})", from.join(", ")).unwrap();
        }
        if !release.is_empty() {
            writeln!(s, "#pragma omp target exit data map(release: {})", release.join(", ")).unwrap();
        }
    }
    s.push_str(
        "  double us = (double)(t1.tv_sec - t0.tv_sec) * 1e6 + (double)(t1.tv_nsec - t0.tv_nsec) / 1e3;\n  printf(\"KERNEL_TIME_US=%.3f\\n\", us);\n",
    );
    for a in &spec.data_arrays {
        writeln!(s, "  free({});", a.name).unwrap();
    }
    s.push_str("  return 0;\n}\n");
    Ok(s)
}

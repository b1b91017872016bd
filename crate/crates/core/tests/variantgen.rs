use paragraph_core::frontend::{parse_source, NodeKind};
use paragraph_core::variantgen::{
    builtin_kernels, enumerate_dataset_points, generate_variant, harness_source, read_manifest, write_variants,
    KernelSpec, VariantError, VariantKind, VariantParams,
};

fn params(n: i64, teams: u32, threads: u32) -> VariantParams {
    VariantParams { sizes: [("n".to_string(), n)].into(), num_teams: teams, num_threads: threads }
}

#[test]
fn every_builtin_kernel_yields_its_variants() {
    for spec in builtin_kernels() {
        spec.validate().unwrap();
        for kind in VariantKind::ALL {
            let r = generate_variant(&spec, kind, &params(32, 2, 8));
            if kind.needs_collapse() && !spec.collapsible {
                assert!(matches!(r, Err(VariantError::NotCollapsible { .. })), "{} {kind}", spec.kernel_name);
                continue;
            }
            let v = r.unwrap();
            let ast = parse_source(&v.source).unwrap();
            let dirs: Vec<_> = ast.ids_of_kind(NodeKind::OmpDirective).collect();
            assert_eq!(dirs.len(), 1, "{}", v.stem());
            let d = ast.node(dirs[0]).directive.as_ref().unwrap();
            assert_eq!(d.is_target(), kind.is_gpu());
            assert_eq!(d.has_map(), kind.maps_data());
            assert_eq!(d.collapse() >= 2, kind.needs_collapse());
            assert_eq!(ast.kind(ast.node(dirs[0]).children[0]), NodeKind::ForStmt);
            let h = harness_source(&spec, &v).unwrap();
            assert!(h.contains("KERNEL_TIME_US=") && h.contains("int n = 32;"));
        }
        let n = enumerate_dataset_points(&spec, &[8, 16], &[1, 2], &[4]).unwrap().len();
        assert_eq!(n, if spec.collapsible { 20 } else { 10 });
    }
}

#[test]
fn grid_size_counts() {
    let specs = builtin_kernels();
    let total: usize = specs.iter().map(|s| enumerate_dataset_points(s, &[8, 16, 32], &[1, 2], &[4, 8]).unwrap().len()).sum();
    let collapsible = specs.iter().filter(|s| s.collapsible).count();
    // cpu kinds ignore the team grid.
    let per_collapsible = 3 * 2 * (2 + 4 * 2);
    let per_other = 3 * 2 * (1 + 2 * 2);
    assert_eq!(total, collapsible * per_collapsible + (specs.len() - collapsible) * per_other);
}

#[test]
fn manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let specs = builtin_kernels();
    let kernels: Vec<_> = specs.iter().take(2).map(|s| (s.clone(), enumerate_dataset_points(s, &[8], &[2], &[4]).unwrap())).collect();
    let manifest = write_variants(dir.path(), &kernels).unwrap();
    let back = read_manifest(dir.path()).unwrap();
    assert_eq!(back.len(), manifest.entries.len());
    let originals: Vec<_> = kernels.iter().flat_map(|(_, v)| v.clone()).collect();
    for ((e, v), o) in back.iter().zip(&originals) {
        assert_eq!(v, o);
        assert!(dir.path().join(&e.harness).is_file());
    }
}

#[test]
fn bad_specs_are_rejected() {
    let mut spec: KernelSpec = builtin_kernels().remove(0);
    spec.source = spec.source.replace("// @kernel\n", "");
    assert!(matches!(spec.validate(), Err(VariantError::MissingMarker(_))));
    let mut spec: KernelSpec = builtin_kernels().remove(0);
    spec.source = spec.source.replace("// @kernel", "// @kernel\n  { }");
    let err = spec.validate();
    assert!(matches!(err, Err(VariantError::MarkerNotOnLoop(_))), "{err:?}");
    assert!(KernelSpec::from_json("{\"kernel_name\": 3}").is_err());
    let spec = builtin_kernels().remove(0);
    assert!(matches!(
        generate_variant(&spec, VariantKind::Cpu, &VariantParams { sizes: Default::default(), num_teams: 1, num_threads: 2 }),
        Err(VariantError::MissingSize(_))
    ));
}

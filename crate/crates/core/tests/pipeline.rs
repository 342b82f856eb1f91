use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use synthcd_core::fixtures::grid_city;
use synthcd_core::map_ingest::{serialize_elevation_grid, to_geojson};
use synthcd_core::pipeline::{
    dataset_stats, generate_dataset, patch_offsets, tile_dataset, tile_patches, GenerationConfig, Manifest,
    SampleMetadata, COMPLETE_MARKER, MASK_FILE, META_FILE, PATCH_INDEX_FILE,
};
use synthcd_core::renderer::{ChangeMask, Image};
use walkdir::WalkDir;

fn write_inputs(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let (doc, grid) = grid_city(n, 3);
    let map = dir.join("city.geojson");
    let elev = dir.join("city.asc");
    fs::write(&map, to_geojson(&doc)).unwrap();
    fs::write(&elev, serialize_elevation_grid(&grid)).unwrap();
    (map, elev)
}

fn small_config(dir: &Path, out: &str) -> GenerationConfig {
    let (map, elev) = write_inputs(dir, 9);
    let mut cfg = GenerationConfig::default();
    cfg.input.map = map;
    cfg.input.elevation = elev;
    cfg.output.dir = dir.join(out);
    cfg.image.width = 96;
    cfg.image.height = 96;
    cfg.image.target_gsd = 1.0;
    cfg.render.msaa = 2;
    cfg.render.shadow_map_size = 512;
    cfg.run.master_seed = 11;
    cfg.run.workers = 2;
    cfg
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(root).unwrap().display().to_string(), fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn one_change_set_with_five_conditions_gives_five_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "out");
    let out = generate_dataset(&cfg).unwrap();
    assert_eq!(out.rendered, 5);
    assert_eq!(out.manifest.samples.len(), 5);
    assert!(out.manifest.errors.is_empty());
    for (k, e) in out.manifest.samples.iter().enumerate() {
        assert_eq!(e.meta.condition_index, k);
        assert_eq!(e.path, format!("dataset/scene_0/change_0/cond_{k}"));
        let dir = cfg.output.dir.join(&e.path);
        let bytes = fs::read(dir.join(META_FILE)).unwrap();
        let meta = SampleMetadata::from_bytes(&bytes).unwrap();
        assert_eq!(meta, e.meta);
        assert_eq!(meta.to_bytes(), bytes);
        assert_eq!(fs::read_to_string(dir.join(COMPLETE_MARKER)).unwrap().trim(), e.meta_sha256);
        assert_eq!(meta.width, 96);
        assert_eq!(meta.render.msaa, 2);
        assert_eq!(meta.before_camera.inclination_alpha, 0.0);
        assert_eq!(meta.before_sun.declination, 85.0);
        assert!(!meta.damaged_ids.is_empty());
        let mask = ChangeMask::read_png(&dir.join(MASK_FILE)).unwrap();
        assert!(!mask.is_empty(), "nonempty change set in frame gives a nonempty mask");
    }
    let loaded = Manifest::load(&out.manifest_path).unwrap();
    assert_eq!(loaded, out.manifest);
}

#[test]
fn rerun_is_idempotent_and_partial_samples_are_redone() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "out");
    generate_dataset(&cfg).unwrap();
    let before = tree(&cfg.output.dir);
    let again = generate_dataset(&cfg).unwrap();
    assert_eq!((again.rendered, again.skipped), (0, 5));
    assert_eq!(tree(&cfg.output.dir), before);

    let victim = cfg.output.dir.join("dataset/scene_0/change_0/cond_2");
    fs::remove_file(victim.join(COMPLETE_MARKER)).unwrap();
    fs::write(victim.join(MASK_FILE), b"truncated").unwrap();
    let third = generate_dataset(&cfg).unwrap();
    assert_eq!((third.rendered, third.skipped), (1, 4));
    assert_eq!(tree(&cfg.output.dir), before);
}

#[test]
fn zero_fraction_range_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path(), "out");
    cfg.conditions.m = 1;
    cfg.changes.fraction = [0.0, 0.0];
    assert!(generate_dataset(&cfg).is_err());
    assert!(!cfg.output.dir.exists());
}

#[test]
fn output_is_independent_of_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = small_config(tmp.path(), "w1");
    a.run.workers = 1;
    a.run.changes_per_scene = 2;
    a.conditions.m = 2;
    let mut b = a.clone();
    b.run.workers = 4;
    b.output.dir = tmp.path().join("w4");
    generate_dataset(&a).unwrap();
    generate_dataset(&b).unwrap();
    assert_eq!(tree(&a.output.dir), tree(&b.output.dir));
}

#[test]
fn adding_scenes_keeps_existing_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let mut a = small_config(tmp.path(), "one");
    a.conditions.m = 2;
    let mut b = a.clone();
    b.run.scenes = 2;
    b.output.dir = tmp.path().join("two");
    let ma = generate_dataset(&a).unwrap().manifest;
    let mb = generate_dataset(&b).unwrap().manifest;
    assert_eq!(mb.samples.len(), 4);
    assert_eq!(&mb.samples[..2], &ma.samples[..]);
    let (ta, tb) = (tree(&a.output.dir.join("dataset")), tree(&b.output.dir.join("dataset")));
    for (k, v) in &ta {
        assert_eq!(tb.get(k), Some(v), "{k}");
    }
}

#[test]
fn stats_fractions_containment_and_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path(), "fixed");
    cfg.conditions.fixed_before = true;
    cfg.conditions.m = 3;
    cfg.run.changes_per_scene = 3;
    let out = generate_dataset(&cfg).unwrap();
    let stats = dataset_stats(&out.manifest_path).unwrap();
    assert_eq!(stats.damaged_fractions.len(), 3);
    for f in &stats.damaged_fractions {
        assert!((0.3..=0.5).contains(f), "damaged fraction {f}");
    }
    assert_eq!(stats.alpha_histogram.total(), 9);
    assert_eq!(stats.containment_failures, 0, "{:?}", stats.samples);
    assert!(stats.samples.iter().all(|s| s.change_pixel_fraction.unwrap() > 0.0));

    let victim = cfg.output.dir.join(&out.manifest.samples[4].path);
    ChangeMask::from_fn(96, 96, |_, _| true).write_png(&victim.join(MASK_FILE)).unwrap();
    fs::remove_file(cfg.output.dir.join(&out.manifest.samples[7].path).join("after.png")).unwrap();
    let stats = dataset_stats(&out.manifest_path).unwrap();
    assert!(!stats.samples[4].containment_ok);
    assert!(stats.samples[4].containment_violations.unwrap() > 0);
    assert_eq!(stats.samples[7].missing, vec!["after.png".to_string()]);
    assert_eq!(stats.containment_failures, 2);
    assert_eq!(stats.missing_files, 1);
}

#[test]
fn empty_change_dataset_has_no_change_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path(), "empty");
    cfg.changes.debug_empty = true;
    cfg.changes.fraction = [0.0, 0.0];
    cfg.conditions.m = 2;
    let out = generate_dataset(&cfg).unwrap();
    let stats = dataset_stats(&out.manifest_path).unwrap();
    assert!(stats.samples.iter().all(|s| s.change_pixel_fraction == Some(0.0)));
    assert_eq!(stats.damaged_fractions, vec![0.0]);
}

#[test]
fn full_size_tiling_grid() {
    let img = Image::new(3072, 3072);
    let mask = ChangeMask::from_fn(3072, 3072, |x, y| (x * 7 + y * 13) % 11 == 0);
    let patches = tile_patches(&img, &img, &mask, 352, 352).unwrap();
    assert_eq!(patches.len(), 81);
    assert_eq!(patch_offsets(3072, 352, 352).unwrap().last(), Some(&2720));
    for p in &patches {
        assert_eq!((p.before.width, p.after.height, p.mask.width, p.mask.height), (352, 352, 352, 352));
        assert_eq!(p.mask, mask.crop(p.x, p.y, 352, 352));
    }
    assert_eq!(tile_patches(&img, &img, &mask, 3072, 1).unwrap().len(), 1);
    assert!(tile_patches(&img, &img, &mask, 3073, 1).is_err());
}

#[test]
fn tiling_a_generated_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path(), "out");
    cfg.conditions.m = 2;
    let out = generate_dataset(&cfg).unwrap();
    let tiles = tmp.path().join("tiles");
    let report = tile_dataset(&out.manifest_path, &tiles, 40, 32).unwrap();
    // offsets 0, 32, 56 per axis
    assert_eq!(report.patches.len(), 2 * 9);
    assert!(tiles.join(PATCH_INDEX_FILE).is_file());
    let src = ChangeMask::read_png(&cfg.output.dir.join(&out.manifest.samples[1].path).join(MASK_FILE)).unwrap();
    for p in report.patches.iter().filter(|p| p.source == out.manifest.samples[1].path) {
        let m = ChangeMask::read_png(&tiles.join(&p.path).join(MASK_FILE)).unwrap();
        assert_eq!(m, src.crop(p.x, p.y, 40, 40));
        assert_eq!(m.count(), p.mask_pixels);
    }
}

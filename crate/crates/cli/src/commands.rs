use std::path::{Path, PathBuf};

use autodirector::director::InterestObjects;
use autodirector::evaluation::{compare, report, CutArray, OverlapMode};
use autodirector::evaluation::instructions_to_cuts;
use autodirector::director::{instructions_to_text, parse_instructions};
use autodirector::pipeline::{camera_tracks, direct_all, load_detections, production_frames, track_all, PipelineManifest, TraceFile};
use autodirector::projection::{encode_ppm, extract_crop, instruction_to_camera, read_ppm, remap, EquirectGeometry, Lens};
use autodirector::reid::{
    assign_identities, cluster_report, direct_person, feature_file_text, features_from_file, frame_file_name,
    parse_feature_file, track_features, ColorHistogramProvider, FeatureProvider, SyntheticProvider,
};
use autodirector::sim::{simulate_scene, GroundTruth, SimParams};
use autodirector::tracking::TraceKind;
use autodirector::{Error, Exec, FrameGeometry, Result};

use crate::io::{emit, read_text, write_atomic};
use crate::{DirectArgs, EvaluateArgs, ProjectArgs, ProviderKind, ReidArgs, SimulateArgs, TrackArgs};

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let geometry = FrameGeometry::new(a.width, a.height, a.fps)?;
    let mut p = SimParams::new(a.scenario, a.frames, a.seed).noise(a.noise, a.drop);
    p.geometry = geometry;
    p.stream = a.stream;
    let (set, truth) = simulate_scene(&p)?;
    emit(&a.out, &format!("detections_{}.txt", a.stream), set.to_text().as_bytes())?;
    emit(&a.out, &format!("truth_{}.txt", a.stream), truth.to_text(a.stream, &geometry).as_bytes())?;
    Ok(())
}

fn out_dir(m: &PipelineManifest, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| m.out_dir())
}

fn load_traces(path: &Path) -> Result<TraceFile> {
    TraceFile::from_json(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn track(a: TrackArgs, exec: Exec) -> Result<()> {
    let m = PipelineManifest::load(&a.manifest)?;
    let sets = load_detections(&m, exec)?;
    let traces = track_all(&m, &sets, exec)?;
    for s in 0..m.inputs.len() {
        println!(
            "stream {s}: {} individual, {} group",
            traces.count(s, TraceKind::Individual),
            traces.count(s, TraceKind::Group)
        );
    }
    emit(&out_dir(&m, a.out), "traces.json", traces.to_json().as_bytes())?;
    Ok(())
}

pub fn direct(a: DirectArgs, exec: Exec) -> Result<()> {
    let mut m = PipelineManifest::load(&a.manifest)?;
    if let Some(seed) = a.seed {
        m.director.rng_seed = seed;
    }
    if let Some(l) = a.min_cut_length {
        m.director.min_cut_length = l;
    }
    if a.segmented {
        m.director.best_viewpoint_always = false;
    }
    m.validate()?;
    let sets = load_detections(&m, exec)?;
    let traces = match &a.traces {
        Some(p) => load_traces(p)?,
        None => track_all(&m, &sets, exec)?,
    };
    let d = direct_all(&m, &sets, &traces, exec)?;
    let dir = out_dir(&m, a.out);
    println!("{} frames, {} shots, {} cuts", d.direction.instructions.len(), d.direction.shots.len(), d.cuts.cuts.len() - 1);
    emit(&dir, "instructions.txt", instructions_to_text(&d.direction.instructions).as_bytes())?;
    emit(&dir, "cuts.json", d.cuts.to_json().as_bytes())?;
    Ok(())
}

pub fn reid(a: ReidArgs, exec: Exec) -> Result<()> {
    let m = PipelineManifest::load(&a.manifest)?;
    let sets = load_detections(&m, exec)?;
    let traces = match &a.traces {
        Some(p) => load_traces(p)?,
        None => track_all(&m, &sets, exec)?,
    };
    let tracks = camera_tracks(&m, &traces, exec)?;
    let dir = out_dir(&m, a.out);
    let features = match (&a.features, a.provider) {
        (Some(path), _) => {
            let by_id = parse_feature_file(&read_text(path)?).map_err(|e| e.in_file(path))?;
            features_from_file(&tracks, &by_id)?
        }
        (None, Some(kind)) => {
            let provider: Box<dyn FeatureProvider> = match kind {
                ProviderKind::Synthetic => {
                    let mut truth = Vec::new();
                    for input in &m.inputs {
                        let p = input
                            .ground_truth
                            .as_ref()
                            .ok_or_else(|| Error::invalid(format!("stream {} has no ground_truth", input.stream)))?;
                        let p = m.resolve(p);
                        truth.push(GroundTruth::parse(&read_text(&p)?).map_err(|e| e.in_file(&p))?);
                    }
                    Box::new(SyntheticProvider::new(truth, a.seed))
                }
                ProviderKind::ColorHistogram => {
                    let dirs = m
                        .inputs
                        .iter()
                        .map(|i| {
                            i.frames_dir
                                .as_ref()
                                .map(|d| m.resolve(d))
                                .ok_or_else(|| Error::invalid(format!("stream {} has no frames_dir", i.stream)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Box::new(ColorHistogramProvider::new(dirs))
                }
            };
            let f = track_features(&tracks, provider.as_ref(), a.representatives, exec)?;
            emit(&dir, "features.txt", feature_file_text(&f).as_bytes())?;
            f
        }
        (None, None) => return Err(Error::invalid("pass --features or --provider")),
    };
    let clusters = assign_identities(&features, a.k, a.seed, a.margin)?;
    emit(&dir, "clusters.json", cluster_report(&clusters).as_bytes())?;
    let n = production_frames(&m, &sets);
    let interest = InterestObjects::from_sets(&sets, &m.director.objects_of_interest);
    let fps = m.director.geometry[0].fps;
    for c in 0..clusters.k {
        let d = direct_person(c, &clusters, &tracks, 0..n, &interest, &m.director, exec)?;
        emit(&dir, &format!("identity_{c}.txt"), instructions_to_text(&d.instructions).as_bytes())?;
        let cuts = instructions_to_cuts(&d.instructions, fps, None)?;
        emit(&dir, &format!("identity_{c}_cuts.json"), cuts.to_json().as_bytes())?;
    }
    Ok(())
}

pub fn project(a: ProjectArgs, exec: Exec) -> Result<()> {
    let instrs = parse_instructions(&read_text(&a.instructions)?).map_err(|e| e.in_file(&a.instructions))?;
    if a.lenses.len() != 1 && a.lenses.len() != a.sources.len() {
        return Err(Error::invalid(format!("{} lenses for {} sources", a.lenses.len(), a.sources.len())));
    }
    for i in &instrs {
        let dir = a
            .sources
            .get(i.stream)
            .ok_or_else(|| Error::invalid(format!("frame {} uses stream {} without a --source", i.frame, i.stream)))?;
        let lens = if a.lenses.len() == 1 { a.lenses[0] } else { a.lenses[i.stream] };
        let path = dir.join(frame_file_name(i.frame));
        let src = read_ppm(&path)?;
        let geom = FrameGeometry::new(src.width(), src.height(), 30.0)?;
        let out = match lens {
            Lens::Flat => extract_crop(&src, &geom, i),
            Lens::Equirect => {
                let eq = EquirectGeometry::from_frame(&geom)?;
                let cam = instruction_to_camera(i, &eq, a.size.0, a.size.1)?;
                remap(&src, &eq, &cam, a.sampling.into(), exec)
            }
        }
        .map_err(|e| e.in_file(&path))?;
        write_atomic(&a.out.join(frame_file_name(i.frame)), &encode_ppm(&out))?;
    }
    println!("wrote {} frames to {}", instrs.len(), a.out.display());
    Ok(())
}

fn load_cuts(path: &Path) -> Result<CutArray> {
    CutArray::from_json(&read_text(path)?).map_err(|e| e.in_file(path))
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (x, y) = (load_cuts(&a.a)?, load_cuts(&a.b)?);
    let mode = if a.raw_overlap { OverlapMode::Raw } else { OverlapMode::SameAngle };
    let c = compare(&x, &y, a.rate, mode)?;
    let text = if a.json {
        let mut s = serde_json::to_string_pretty(&c).expect("comparison serializes");
        s.push('\n');
        s
    } else {
        report(&c)
    };
    match &a.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

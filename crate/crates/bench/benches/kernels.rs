use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ovals_bench::{oval_profile, xi_grid, T_OVAL};
use ovals_core::barriers::{build_barrier, BarrierParams};
use ovals_core::bryant::normalized;
use ovals_core::flow::{rhs, FlowState, MeshSpec, StepControl};
use ovals_core::heat_kernel::{lemma_a1_scan, KernelConfig};
use ovals_core::spectral::{cutoff, project, to_rescaled, HermiteRule};

fn flow(c: &mut Criterion) {
    let p = oval_profile();
    c.bench_function("rhs_oval", |b| b.iter(|| rhs(black_box(&p)).unwrap()));
    let state = FlowState::graded(&p, T_OVAL, MeshSpec::default()).unwrap();
    let ctl = StepControl::default();
    c.bench_function("implicit_step_oval", |b| b.iter(|| state.step(&ctl, T_OVAL / 2.0).unwrap()));
}

fn spectral(c: &mut Criterion) {
    let p = oval_profile();
    let rule = HermiteRule::new(64).unwrap();
    let xi = rule.xi.clone();
    c.bench_function("rescale_cutoff_project", |b| {
        b.iter(|| {
            let g = to_rescaled(&p, T_OVAL, &xi).unwrap();
            let ghat = cutoff(&g, 12.0).unwrap();
            project(&rule, &ghat, 4).unwrap()
        })
    });
    let grid = xi_grid(401, 2.0);
    c.bench_function("rescale_401", |b| b.iter(|| to_rescaled(&p, T_OVAL, black_box(&grid)).unwrap()));
}

fn soliton_and_barrier(c: &mut Criterion) {
    c.bench_function("bryant_solve", |b| b.iter(|| normalized().unwrap()));
    let params = BarrierParams::default();
    c.bench_function("barrier_a20", |b| b.iter(|| build_barrier(black_box(20.0), &params).unwrap()));
}

fn heat(c: &mut Criterion) {
    let cfg = KernelConfig::default();
    c.bench_function("kernel_dxx_dy", |b| b.iter(|| cfg.kernel_dxx_dy(black_box(0.3), 0.7, 0.05).unwrap()));
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    g.bench_function("lemma_scan", |b| b.iter(|| lemma_a1_scan(&cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, flow, spectral, soliton_and_barrier, heat);
criterion_main!(benches);

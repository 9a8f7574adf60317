use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use vlbench_bench::{grouped_bar, histogram, monthly_lines, outcomes, students};
use vlbench_core::engine::evaluate;
use vlbench_core::equivalence::match_svg_json;
use vlbench_core::harness::{aggregate, ReportFormat};
use vlbench_core::lint::lint;
use vlbench_core::prompt::{build_prompt, ExemplarSet, Strategy};
use vlbench_core::spec::{parse_spec, serialize_spec};

fn engine(c: &mut Criterion) {
    let mut g = c.benchmark_group("evaluate");
    for rows in [1_000, 10_000, 100_000] {
        let table = students(rows, 7);
        g.throughput(Throughput::Elements(rows as u64));
        for (name, spec) in [
            ("grouped_bar", grouped_bar()),
            ("monthly_lines", monthly_lines()),
            ("histogram", histogram()),
        ] {
            g.bench_with_input(BenchmarkId::new(name, rows), &table, |b, t| {
                b.iter(|| evaluate(black_box(&spec), t).unwrap())
            });
        }
    }
    g.finish();
}

fn equivalence(c: &mut Criterion) {
    let table = students(10_000, 7);
    let truth = grouped_bar();
    let candidate = truth.swap_xy();
    c.bench_function("match_svg_json/10000", |b| {
        b.iter(|| match_svg_json(black_box(&candidate), &truth, &table).unwrap())
    });
}

fn parsing_and_lint(c: &mut Criterion) {
    let text = serialize_spec(&grouped_bar());
    c.bench_function("parse_spec", |b| b.iter(|| parse_spec(black_box(&text))));
    c.bench_function("lint", |b| b.iter(|| lint(black_box(text.as_str()))));
}

fn prompts(c: &mut Criterion) {
    let table = students(500, 3);
    let set = ExemplarSet::builtin();
    let query =
        "Show the average GPA of female students older than 18 for each major in a bar chart.";
    c.bench_function("build_prompt/few_shot", |b| {
        b.iter(|| build_prompt(Strategy::FewShot, &table, black_box(query), Some(&set)).unwrap())
    });
}

fn reporting(c: &mut Criterion) {
    let (outs, infos) = outcomes(10_000, 500, 11);
    c.bench_function("aggregate/10000", |b| {
        b.iter(|| aggregate(black_box(&outs), &infos).unwrap())
    });
    let report = aggregate(&outs, &infos).unwrap();
    c.bench_function("render/md", |b| {
        b.iter(|| report.render(black_box(ReportFormat::Md)))
    });
}

criterion_group!(
    benches,
    engine,
    equivalence,
    parsing_and_lint,
    prompts,
    reporting
);
criterion_main!(benches);

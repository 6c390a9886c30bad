use chrono::NaiveDate;
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use mincal_bench::{fragments, DIALOG, SENTENCES};
use mincal_core::calendar::EventStore;
use mincal_core::context::DiscourseContext;
use mincal_core::dialog::{handle_utterance, Engine, Session};
use mincal_core::generate;
use mincal_core::parser;

fn chart_vs_oracle(c: &mut Criterion) {
    let e = Engine::standard();
    let ctx = DiscourseContext::live();
    let filters = Some(&e.ontology.filters);
    let mut group = c.benchmark_group("parse");
    for s in SENTENCES {
        let toks = parser::tokenize(s);
        group.bench_with_input(BenchmarkId::new("chart", toks.len()), &toks, |b, t| {
            b.iter(|| parser::parse(&e.grammar, filters, &ctx, black_box(t)))
        });
        if toks.len() <= 8 {
            group.bench_with_input(BenchmarkId::new("oracle", toks.len()), &toks, |b, t| {
                b.iter(|| parser::oracle_parse(&e.grammar, filters, &ctx, black_box(t)))
            });
        }
        group.bench_with_input(BenchmarkId::new("chart_unfiltered", toks.len()), &toks, |b, t| {
            b.iter(|| parser::parse(&e.grammar, None, &ctx, black_box(t)))
        });
    }
    for (ctx, s) in fragments() {
        let toks = parser::tokenize(s);
        group.bench_function(BenchmarkId::new("fragment", s), |b| {
            b.iter(|| parser::parse(&e.grammar, filters, &ctx, black_box(&toks)))
        });
    }
    group.finish();
}

fn dialog(c: &mut Criterion) {
    let e = Engine::standard();
    let today = NaiveDate::from_ymd_opt(1994, 6, 1).unwrap();
    c.bench_function("dialog/schedule_with_bob", |b| {
        b.iter(|| {
            let mut session = Session::new(today);
            let mut store = EventStore::new();
            for turn in DIALOG {
                black_box(handle_utterance(&e, &mut session, &mut store, turn));
            }
        })
    });
}

fn enumerate(c: &mut Criterion) {
    let e = Engine::standard();
    let mut group = c.benchmark_group("enumerate");
    group.sample_size(10);
    for limit in [100, 500, 2000] {
        group.bench_with_input(BenchmarkId::from_parameter(limit), &limit, |b, &n| {
            b.iter(|| generate::enumerate(&e, "sent(cmnd, v.np)", n, generate::DEFAULT_DEPTH).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chart_vs_oracle, dialog, enumerate);
criterion_main!(benches);

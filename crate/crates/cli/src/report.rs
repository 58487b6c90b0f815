use crate::config::TOLERANCES;
use anyhow::Context;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub limit: Value,
    pub relation: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::num(name, value, limit, "<=", value <= limit)
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self::num(name, value, limit, ">=", value >= limit)
    }

    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self::num(name, value, limit, "<", value < limit)
    }

    fn num(name: &str, value: f64, limit: f64, relation: &'static str, pass: bool) -> Self {
        // NaN never passes
        Self { name: name.into(), value: json!(value), limit: json!(limit), relation, pass, detail: None }
    }

    pub fn equals<T: Serialize + PartialEq>(name: &str, value: T, want: T) -> Self {
        let pass = value == want;
        Self { name: name.into(), value: json!(value), limit: json!(want), relation: "==", pass, detail: None }
    }

    pub fn error(name: &str, e: impl std::fmt::Display) -> Self {
        Self { name: name.into(), value: Value::Null, limit: Value::Null, relation: "ok", pass: false, detail: Some(e.to_string()) }
    }
}

/// Rows for CSV output. Cells are preformatted strings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Shortest round-trip spelling, switching to exponent form for very small or large values.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Outcome of one command at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub result: Value,
    pub checks: Vec<Check>,
    pub table: Table,
}

impl Report {
    pub fn failed(name: &str, e: impl std::fmt::Display) -> Self {
        Self { result: Value::Null, checks: vec![Check::error(name, e)], table: Table::default() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<Value> {
        self.checks.iter().filter(|c| !c.pass).map(failure_entry).collect()
    }

    fn body(&self) -> Value {
        json!({
            "result": self.result,
            "checks": self.checks,
            "failures": self.failures(),
            "pass": self.pass(),
        })
    }
}

fn failure_entry(c: &Check) -> Value {
    let mut v = json!({ "check": c.name, "value": c.value, "limit": c.limit, "relation": c.relation });
    if let Some(d) = &c.detail {
        v["detail"] = json!(d);
    }
    v
}

/// Header fields shared by single runs and scans.
pub struct Envelope<'a> {
    pub command: &'a str,
    pub n: usize,
    pub inputs: Value,
}

fn base(env: &Envelope) -> Value {
    json!({
        "schema": 1,
        "command": env.command,
        "N": env.n,
        "inputs": env.inputs,
        "tolerances": TOLERANCES,
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(am), Value::Object(bm)) = (a.as_object_mut(), b) {
        am.extend(bm);
    }
    a
}

pub fn render_single(env: &Envelope, alpha: &str, rep: &Report, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => {
            let doc = merge(merge(base(env), json!({ "alpha": alpha })), rep.body());
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => write_csv(&rep.table.header, rep.table.rows.iter().cloned()),
    }
}

pub fn render_scan(env: &Envelope, spec: &str, cells: &[(String, Report)], format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => {
            let list: Vec<Value> = cells.iter().map(|(a, r)| merge(json!({ "alpha": a }), r.body())).collect();
            let failures: Vec<Value> = cells
                .iter()
                .flat_map(|(a, r)| r.failures().into_iter().map(move |f| merge(json!({ "alpha": a }), f)))
                .collect();
            let pass = failures.is_empty();
            let doc = merge(base(env), json!({ "scan_alpha": spec, "cells": list, "failures": failures, "pass": pass }));
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        Format::Csv => {
            let header = cells.iter().map(|(_, r)| &r.table.header).find(|h| !h.is_empty()).cloned().unwrap_or_default();
            let mut full = vec!["alpha"];
            full.extend(header);
            let rows = cells.iter().flat_map(|(a, r)| {
                r.table.rows.iter().map(move |row| std::iter::once(a.clone()).chain(row.iter().cloned()).collect())
            });
            write_csv(&full, rows)
        }
    }
}

fn write_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    Ok(String::from_utf8(bytes)?)
}

use std::fmt::Write as _;

use serde::Deserialize;

use super::{LossTangentEstimate, ParticipationMatrix, QStatistics, ReportQubit};
use crate::error::{Error, Result};
use crate::geometry::Process;

pub const QSTATS_HEADER: &str = "label,median,std,count";
pub const MEASURED_HEADER: &str = "qubit,design,process,median,std";

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes())
}

fn rows<T: for<'de> Deserialize<'de>>(text: &str, ctx: &str) -> Result<Vec<T>> {
    let out = reader(text).deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(|e| Error::parse(ctx, e))?;
    if out.is_empty() {
        return Err(Error::parse(ctx, "no rows"));
    }
    Ok(out)
}

fn process(s: &str, ctx: &str) -> Result<Process> {
    Process::parse(s).ok_or_else(|| Error::parse(ctx, format!("unknown process '{s}'")))
}

pub fn qstats_to_csv(stats: &[QStatistics]) -> String {
    let mut s = String::from(QSTATS_HEADER);
    s.push('\n');
    for q in stats {
        let _ = writeln!(s, "{},{:e},{:e},{}", q.label, q.median, q.std, q.count);
    }
    s
}

pub fn parse_qstats(text: &str) -> Result<Vec<QStatistics>> {
    #[derive(Deserialize)]
    struct Row {
        label: String,
        median: f64,
        std: f64,
        count: Option<usize>,
    }
    rows::<Row>(text, "Q statistics")?
        .into_iter()
        .map(|r| {
            let mut s = QStatistics::new(r.label, r.median, r.std)?;
            s.count = r.count.unwrap_or(1);
            Ok(s)
        })
        .collect()
}

/// Measured qubits; `design` must be one of `design_labels`.
pub fn parse_measured(text: &str, design_labels: &[String]) -> Result<Vec<ReportQubit>> {
    #[derive(Deserialize)]
    struct Row {
        qubit: String,
        design: String,
        process: String,
        median: f64,
        std: f64,
    }
    let ctx = "measured qubits";
    rows::<Row>(text, ctx)?
        .into_iter()
        .map(|r| {
            let design_row = design_labels.iter().position(|d| *d == r.design).ok_or_else(|| {
                Error::invalid(ctx, format!("{}: design '{}' not in [{}]", r.qubit, r.design, design_labels.join(", ")))
            })?;
            Ok(ReportQubit {
                process: process(&r.process, ctx)?,
                measured: QStatistics::new(r.qubit.clone(), r.median, r.std)?,
                qubit: r.qubit,
                design_row,
            })
        })
        .collect()
}

/// One estimate per process, elements in file order.
pub fn parse_estimates(text: &str) -> Result<Vec<LossTangentEstimate>> {
    #[derive(Deserialize)]
    struct Row {
        element: String,
        tan_delta: f64,
        ci68_halfwidth: f64,
        process: String,
    }
    let ctx = "loss tangent estimates";
    let mut out: Vec<(Process, Vec<String>, Vec<(f64, f64)>)> = Vec::new();
    for r in rows::<Row>(text, ctx)? {
        let p = process(&r.process, ctx)?;
        let i = match out.iter().position(|e| e.0 == p) {
            Some(i) => i,
            None => {
                out.push((p, Vec::new(), Vec::new()));
                out.len() - 1
            }
        };
        out[i].1.push(r.element);
        out[i].2.push((r.tan_delta, r.ci68_halfwidth));
    }
    Ok(out
        .into_iter()
        .map(|(p, el, v)| LossTangentEstimate::from_table(&el.iter().map(String::as_str).collect::<Vec<_>>(), &v, p))
        .collect())
}

/// Reads the element totals of a participation CSV (`interface == total`
/// rows, or the sum of the interface rows when absent). Designs and
/// elements keep their first-appearance order.
pub fn parse_participation(text: &str) -> Result<(Vec<String>, ParticipationMatrix)> {
    #[derive(Deserialize)]
    struct Row {
        design: String,
        element: String,
        interface: String,
        p: f64,
    }
    let ctx = "participation table";
    let rows = rows::<Row>(text, ctx)?;
    let has_totals = rows.iter().any(|r| r.interface == "total");
    let mut designs: Vec<String> = Vec::new();
    let mut elements: Vec<String> = Vec::new();
    let mut v: Vec<Vec<Option<f64>>> = Vec::new();
    for r in rows.into_iter().filter(|r| (r.interface == "total") == has_totals) {
        let d = designs.iter().position(|x| *x == r.design).unwrap_or_else(|| {
            designs.push(r.design.clone());
            v.push(vec![None; elements.len()]);
            designs.len() - 1
        });
        let e = elements.iter().position(|x| *x == r.element).unwrap_or_else(|| {
            elements.push(r.element.clone());
            for row in &mut v {
                row.push(None);
            }
            elements.len() - 1
        });
        let cell = &mut v[d][e];
        *cell = Some(cell.unwrap_or(0.0) + r.p);
    }
    let matrix = v
        .iter()
        .enumerate()
        .map(|(d, row)| {
            row.iter()
                .enumerate()
                .map(|(e, x)| x.ok_or_else(|| Error::Missing(format!("participation of {} in {}", elements[e], designs[d]))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((designs, ParticipationMatrix::new(matrix, elements)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qstats_round_trip() {
        let mut a = QStatistics::new("long", 3.2e6, 1.1e6).unwrap();
        a.count = 40;
        let text = format!("# seed 1\n{}", qstats_to_csv(std::slice::from_ref(&a)));
        assert_eq!(parse_qstats(&text).unwrap(), vec![a]);
    }

    #[test]
    fn participation_totals_or_interface_sums() {
        let with_totals = "design,element,interface,p,provenance\nA,pads,MA,1e-5,x\nA,pads,total,3e-5,x\nB,pads,total,4e-5,x\n";
        let (d, p) = parse_participation(with_totals).unwrap();
        assert_eq!(d, ["A", "B"]);
        assert_eq!(p.rows, vec![vec![3e-5], vec![4e-5]]);
        let sums = "design,element,interface,p\nA,pads,MA,1e-5\nA,pads,MS,2e-5\n";
        assert!((parse_participation(sums).unwrap().1.rows[0][0] - 3e-5).abs() < 1e-20);
        assert!(parse_participation("design,element,interface,p\nA,pads,total,1e-5\nB,leads,total,1e-5\n").is_err());
    }

    #[test]
    fn estimates_group_by_process() {
        let text = "element,tan_delta,ci68_halfwidth,process\npads,1e-3,1e-4,etch\nleads,2e-3,1e-4,etch\npads,3e-3,0,lift-off\n";
        let e = parse_estimates(text).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].central, vec![1e-3, 2e-3]);
        assert_eq!(e[1].process, Process::LiftOff);
        assert!(parse_estimates("element,tan_delta,ci68_halfwidth,process\npads,1,1,other\n").is_err());
    }

    #[test]
    fn measured_rows_need_known_designs() {
        let labels = vec!["long".to_string()];
        let ok = parse_measured("qubit,design,process,median,std\nQ1,long,etch,2e6,0\n", &labels).unwrap();
        assert_eq!(ok[0].design_row, 0);
        assert!(parse_measured("qubit,design,process,median,std\nQ1,wide,etch,2e6,0\n", &labels).is_err());
    }
}

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RiskReport;
use crate::generation::{harm_label, Layer, Origin, RiskItem, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Markdown,
    Html,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Html => "html",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            "html" => Ok(Format::Html),
            other => Err(format!("unknown format `{other}` (expected json, markdown or html)")),
        }
    }
}

const HARM_MARK: &str = "⚑";
const CELL_MARK: &str = "●";

/// Render a report. Output is a pure function of the report.
pub fn render(report: &RiskReport, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Markdown => markdown(report),
        Format::Html => html(report),
    }
}

fn badge(layer: Layer) -> &'static str {
    match layer {
        Layer::Capability => "C",
        Layer::HumanInteraction => "H",
        Layer::Systemic => "S",
    }
}

fn source_list(sources: &[Source]) -> String {
    sources
        .iter()
        .map(|s| s.origin.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Harm types in order of first appearance among the prioritized risks.
fn categories(risks: &[RiskItem]) -> Vec<&str> {
    let mut seen: Vec<&str> = Vec::new();
    for r in risks {
        if !seen.contains(&r.harm_type.as_str()) {
            seen.push(&r.harm_type);
        }
    }
    seen
}

fn md_cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn risk_refs(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| format!("R{}", i + 1))
        .collect::<Vec<_>>()
        .join(", ")
}

fn markdown(r: &RiskReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Risk report: {}\n", r.model_id);
    for line in r.model_description.lines() {
        let _ = writeln!(out, "> {line}");
    }
    out.push('\n');

    out.push_str("## Example Uses\n\n");
    if r.uses.is_empty() {
        out.push_str("_No example uses were generated._\n");
    }
    for (j, u) in r.uses.iter().enumerate() {
        let _ = writeln!(
            out,
            "- **U{}. {}**: {} (deployer: {}; subject: {}; capability: {})",
            j + 1,
            u.domain,
            u.purpose,
            u.ai_deployer,
            u.ai_subject,
            u.capability
        );
    }
    out.push('\n');

    out.push_str("## Risk Summary\n\n");
    if r.risks.is_empty() {
        out.push_str("_No identified risks: nothing retrieved applies to this model._\n\n");
    } else {
        let _ = writeln!(
            out,
            "{HARM_MARK} real-world harm reported in an AI incident · {CELL_MARK} risk applies to the use · layer: [C] capability, [H] human interaction, [S] systemic\n"
        );
        out.push_str("| # | Risk | Category |");
        for j in 0..r.uses.len() {
            let _ = write!(out, " U{} |", j + 1);
        }
        out.push_str("\n|---|---|---|");
        out.push_str(&":-:|".repeat(r.uses.len()));
        out.push('\n');
        for (i, risk) in r.risks.iter().enumerate() {
            let flag = if risk.from_incident {
                format!("{HARM_MARK} ")
            } else {
                String::new()
            };
            let _ = write!(
                out,
                "| R{} | {flag}{} | [{}] {} |",
                i + 1,
                md_cell(&risk.text),
                badge(risk.layer),
                harm_label(&risk.harm_type)
            );
            for &cell in &r.mapping[i] {
                out.push_str(if cell { " ● |" } else { "  |" });
            }
            out.push('\n');
        }
        out.push('\n');
        let general = r.general_risks();
        if !general.is_empty() {
            out.push_str("### General risks\n\nNot tied to a particular example use:\n\n");
            for i in general {
                let _ = writeln!(out, "- R{}: {}", i + 1, r.risks[i].text);
            }
            out.push('\n');
        }
    }

    out.push_str("## Risks by Category\n\n");
    if r.risks.is_empty() {
        out.push_str("_None._\n\n");
    }
    for cat in categories(&r.risks) {
        let _ = writeln!(out, "### {}\n", harm_label(cat));
        for (i, risk) in r.risks.iter().enumerate().filter(|(_, x)| x.harm_type == cat) {
            let flag = if risk.from_incident {
                format!(" {HARM_MARK}")
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "- R{}{flag} [{}] {} _(source: {})_",
                i + 1,
                risk.layer.label(),
                risk.text,
                source_list(&risk.sources)
            );
        }
        out.push('\n');
    }

    out.push_str("## Mitigations\n\n");
    if r.mitigations.is_empty() {
        out.push_str("_No mitigations found in the retrieved cards._\n");
    }
    for (n, m) in r.mitigations.iter().enumerate() {
        let target = if m.applies_to.is_empty() {
            "general advice, not linked to a listed risk".to_string()
        } else {
            format!("addresses {}", risk_refs(&m.applies_to))
        };
        let _ = writeln!(out, "{}. {} ({target})", n + 1, m.text);
    }
    out.push('\n');

    provenance_md(r, &mut out);
    out
}

fn provenance_md(r: &RiskReport, out: &mut String) {
    let p = &r.provenance;
    out.push_str("---\n\n");
    let _ = write!(
        out,
        "Retrieval: {} top-{} · generator: {} · scorer: {}",
        p.backend, p.k, p.chat_model, p.scorer
    );
    if let Some(m) = &p.embedding_model {
        let _ = write!(out, " · embeddings: {m}");
    }
    if let Some(t) = &p.timestamp {
        let _ = write!(out, " · generated {t}");
    }
    out.push('\n');
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Heatmap shade for risk `i` of `n`: the first third of the priority order
/// is darkest.
fn tercile(i: usize, n: usize) -> usize {
    (i * 3 / n.max(1)).min(2)
}

const SHADES: [&str; 3] = ["#b2182b", "#ef8a62", "#fddbc7"];
const INK: [&str; 3] = ["#ffffff", "#222222", "#222222"];

const STYLE: &str = "body{font-family:system-ui,sans-serif;max-width:60rem;margin:2rem auto;padding:0 1rem;color:#222;line-height:1.45}\
table{border-collapse:collapse;width:100%;margin:1rem 0}\
th,td{border:1px solid #ccc;padding:.35rem .5rem;vertical-align:top;text-align:left}\
td.cell{text-align:center;width:3.5rem}\
.badge{display:inline-block;border-radius:.25rem;padding:0 .35rem;font-size:.8em;background:#e0e0e0}\
.harm{color:#b2182b;font-weight:bold}\
blockquote{color:#555;border-left:3px solid #ccc;margin:0;padding-left:1rem}\
footer{color:#777;font-size:.85em;border-top:1px solid #ddd;margin-top:2rem;padding-top:.5rem}";

fn html(r: &RiskReport) -> String {
    let mut o = String::new();
    let _ = write!(
        o,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Risk report: {}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n",
        esc(&r.model_id)
    );
    let _ = writeln!(o, "<h1>Risk report: {}</h1>", esc(&r.model_id));
    let _ = writeln!(o, "<blockquote>{}</blockquote>", esc(&r.model_description));

    o.push_str("<h2>Example Uses</h2>\n");
    if r.uses.is_empty() {
        o.push_str("<p><em>No example uses were generated.</em></p>\n");
    } else {
        o.push_str("<ol>\n");
        for u in &r.uses {
            let _ = writeln!(
                o,
                "<li><strong>{}</strong>: {} <small>(deployer: {}; subject: {}; capability: {})</small></li>",
                esc(&u.domain),
                esc(&u.purpose),
                esc(&u.ai_deployer),
                esc(&u.ai_subject),
                esc(&u.capability)
            );
        }
        o.push_str("</ol>\n");
    }

    o.push_str("<h2>Risk Summary</h2>\n");
    if r.risks.is_empty() {
        o.push_str("<p><em>No identified risks: nothing retrieved applies to this model.</em></p>\n");
    } else {
        let _ = writeln!(
            o,
            "<p><span class=\"harm\">{HARM_MARK}</span> real-world harm reported in an AI incident · shaded cell: risk applies to the use (darker = higher priority) · layer badge: C capability, H human interaction, S systemic</p>"
        );
        o.push_str("<table class=\"heatmap\">\n<thead><tr><th>#</th><th>Risk</th><th>Category</th>");
        for (j, u) in r.uses.iter().enumerate() {
            let _ = write!(o, "<th title=\"{}\">U{}</th>", esc(&u.summary()), j + 1);
        }
        o.push_str("</tr></thead>\n<tbody>\n");
        let n = r.risks.len();
        for (i, risk) in r.risks.iter().enumerate() {
            let flag = if risk.from_incident {
                format!("<span class=\"harm\">{HARM_MARK}</span> ")
            } else {
                String::new()
            };
            let _ = write!(
                o,
                "<tr><td>R{}</td><td>{flag}{}</td><td><span class=\"badge\">{}</span> {}</td>",
                i + 1,
                esc(&risk.text),
                badge(risk.layer),
                esc(&harm_label(&risk.harm_type))
            );
            let t = tercile(i, n);
            for &cell in &r.mapping[i] {
                if cell {
                    let _ = write!(
                        o,
                        "<td class=\"cell\" style=\"background:{};color:{}\">{CELL_MARK}</td>",
                        SHADES[t], INK[t]
                    );
                } else {
                    o.push_str("<td class=\"cell\"></td>");
                }
            }
            o.push_str("</tr>\n");
        }
        o.push_str("</tbody>\n</table>\n");
        let general = r.general_risks();
        if !general.is_empty() {
            o.push_str("<h3>General risks</h3>\n<p>Not tied to a particular example use:</p>\n<ul>\n");
            for i in general {
                let _ = writeln!(o, "<li>R{}: {}</li>", i + 1, esc(&r.risks[i].text));
            }
            o.push_str("</ul>\n");
        }
    }

    o.push_str("<h2>Risks by Category</h2>\n");
    if r.risks.is_empty() {
        o.push_str("<p><em>None.</em></p>\n");
    }
    for cat in categories(&r.risks) {
        let _ = writeln!(o, "<h3>{}</h3>\n<ul>", esc(&harm_label(cat)));
        for (i, risk) in r.risks.iter().enumerate().filter(|(_, x)| x.harm_type == cat) {
            let flag = if risk.from_incident {
                format!(" <span class=\"harm\">{HARM_MARK}</span>")
            } else {
                String::new()
            };
            let sources = risk
                .sources
                .iter()
                .map(|s| match &s.origin {
                    Origin::Card(id) => esc(id),
                    Origin::Incident(id) => format!("incident #{id}"),
                })
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(
                o,
                "<li>R{}{flag} <span class=\"badge\">{}</span> {} <small>(source: {sources})</small></li>",
                i + 1,
                risk.layer.label(),
                esc(&risk.text)
            );
        }
        o.push_str("</ul>\n");
    }

    o.push_str("<h2>Mitigations</h2>\n");
    if r.mitigations.is_empty() {
        o.push_str("<p><em>No mitigations found in the retrieved cards.</em></p>\n");
    } else {
        o.push_str("<ol>\n");
        for m in &r.mitigations {
            let target = if m.applies_to.is_empty() {
                "general advice, not linked to a listed risk".to_string()
            } else {
                format!("addresses {}", risk_refs(&m.applies_to))
            };
            let _ = writeln!(o, "<li>{} <small>({target})</small></li>", esc(&m.text));
        }
        o.push_str("</ol>\n");
    }

    let mut foot = String::new();
    provenance_md(r, &mut foot);
    let _ = writeln!(
        o,
        "<footer>{}</footer>",
        esc(foot.trim_start_matches("---\n\n").trim_end())
    );
    o.push_str("</body>\n</html>\n");
    o
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{MappedRisks, MitigationItem, UseCase};
    use crate::report::{assemble_report, tests::provenance};

    fn report(n_risks: usize, n_uses: usize) -> RiskReport {
        let uses = (0..n_uses)
            .map(|j| UseCase {
                domain: format!("Domain {j}"),
                purpose: "p".into(),
                capability: "c".into(),
                ai_deployer: "d".into(),
                ai_subject: "s".into(),
                likelihood_rank: j as u32 + 1,
            })
            .collect();
        let risks = (0..n_risks)
            .map(|i| RiskItem {
                text: format!("reflects <bias> number {i}"),
                layer: Layer::Systemic,
                harm_type: "representation_and_toxicity".into(),
                from_incident: i == 0,
                sources: vec![Source::incident(9)],
            })
            .collect();
        let mapped = MappedRisks {
            risks,
            mapping: vec![vec![true; n_uses]; n_risks],
            dropped: vec![],
        };
        let mitigation = MitigationItem {
            text: "audit outputs".into(),
            sources: vec![],
            applies_to: (0..n_risks).collect(),
            unmapped: false,
        };
        assemble_report("org/m", "A model.", uses, mapped, vec![mitigation], provenance()).unwrap()
    }

    #[test]
    fn json_round_trips() {
        let r = report(2, 3);
        let back: RiskReport = serde_json::from_str(&render(&r, Format::Json)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn one_risk_four_uses_makes_a_one_by_four_heatmap() {
        let r = report(1, 4);
        let html = render(&r, Format::Html);
        assert_eq!(html.matches("<td class=\"cell\"").count(), 4);
        assert!(html.contains("&lt;bias&gt;"));
        assert!(!html.contains("<script"));
        let md = render(&r, Format::Markdown);
        let row = md.lines().find(|l| l.starts_with("| R1 ")).unwrap();
        assert_eq!(row.matches('●').count(), 4);
        assert!(row.contains(HARM_MARK));
    }

    #[test]
    fn empty_report_states_no_risks() {
        let r = report(0, 2);
        assert!(render(&r, Format::Markdown).contains("No identified risks"));
        assert!(render(&r, Format::Html).contains("No identified risks"));
    }

    #[test]
    fn terciles() {
        let shades: Vec<usize> = (0..6).map(|i| tercile(i, 6)).collect();
        assert_eq!(shades, [0, 0, 1, 1, 2, 2]);
        assert_eq!(tercile(0, 1), 0);
    }

    #[test]
    fn format_parsing() {
        assert_eq!("md".parse::<Format>().unwrap(), Format::Markdown);
        assert!("pdf".parse::<Format>().is_err());
    }
}

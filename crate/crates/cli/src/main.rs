use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use igup::bounds::{self, Convention, Scope};
use igup::commutators::{commutativity_check, render_table_one, table_one, xx_position_momentum_basis};
use igup::convert::{a_to_alpha_map, alpha_to_a_map, alpha_to_b_map, extend_1d_commutative, extend_1d_noncommutative};
use igup::models::{Catalog, ModelDef, ModelSpec, RepresentationKind};
use igup::text::{inline_table, parse_series, parse_symbol_decl};
use igup::uncertainty::{model_min, Method, Options};
use igup::MomentumSeries;

#[derive(Parser)]
#[command(name = "igup", version, about = "Series tools for isotropic generalized uncertainty principles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Truncation order (maximum α-weight kept).
    #[arg(long, global = true, default_value_t = 4)]
    order: i32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Declare or re-weight an inline symbol, `name:weight`.
    #[arg(long = "symbol", global = true, value_name = "NAME:WEIGHT")]
    symbols: Vec<String>,
    /// Extra directory of `.model` files.
    #[arg(long, global = true)]
    models_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List the model catalog.
    Catalog,
    /// Expand [x_i, p_j] and [x_i, x_j] of a model.
    Expand {
        #[command(flatten)]
        model: ModelArgs,
        /// Also give [x_i, x_j] in the position-momentum basis.
        #[arg(long)]
        position_momentum: bool,
    },
    /// Convert between the a, b and alpha parameter families.
    Convert {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        to: Family,
    },
    /// Extend a 1D generator to three dimensions.
    Extend {
        #[command(flatten)]
        model: ModelArgs,
        /// The unique commutative extension (default).
        #[arg(long, conflicts_with = "noncommutative")]
        commutative: bool,
        /// The noncommutative extension with the given f.
        #[arg(long, value_name = "F_EXPR")]
        noncommutative: Option<String>,
    },
    /// Test whether the position operators commute.
    CheckComm {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Coefficients c^(n)_(P-n) over generic alpha symbols.
    Table1 {
        #[arg(long, default_value_t = 4)]
        max_order: i32,
    },
    /// Minimal position uncertainty.
    MinUncertainty {
        #[command(flatten)]
        model: ModelArgs,
        /// Parameter value, `name=value`.
        #[arg(long = "param", value_name = "NAME=VALUE")]
        params: Vec<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
        #[arg(long, default_value_t = 1.0)]
        hbar: f64,
        #[arg(long, default_value_t = 64)]
        points_per_decade: usize,
        #[arg(long, default_value_t = 4.0)]
        decades: f64,
        /// Refinement tolerance, relative.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Experimental bounds table, or one translated bound.
    Bounds {
        /// Dataset file; the shipped dataset by default.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Translate a single bound in this convention.
        #[arg(long, requires = "value")]
        convention: Option<String>,
        #[arg(long, requires = "convention")]
        value: Option<f64>,
        #[arg(long, default_value = "any")]
        scope: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    A,
    B,
    Alpha,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Moment closure on unbounded domains, saturation scan otherwise.
    Auto,
    MomentClosure,
    SaturationScan,
    Iso3d,
}

#[derive(Args)]
struct ModelArgs {
    /// Catalog model name or alias.
    #[arg(long, conflicts_with_all = ["f", "alpha", "gen1d"])]
    model: Option<String>,
    /// Inline f(p) of the noncommutative representation.
    #[arg(long, value_name = "EXPR")]
    f: Option<String>,
    /// Inline g(p), used with --f.
    #[arg(long, value_name = "EXPR", requires = "f")]
    g: Option<String>,
    /// Inline commutative multiplier h(rho).
    #[arg(long, value_name = "EXPR", conflicts_with_all = ["f", "gen1d"])]
    alpha: Option<String>,
    /// Inline 1D generator F(p) with [x, p] = i hbar F.
    #[arg(long, value_name = "EXPR", conflicts_with = "f")]
    gen1d: Option<String>,
    /// Largest |p| for inline models.
    #[arg(long, value_name = "EXPR")]
    domain: Option<String>,
}

struct Ctx {
    order: i32,
    format: Format,
    catalog: Catalog,
    symbols: Arc<igup::SymbolTable>,
}

impl Ctx {
    fn spec(&self, m: &ModelArgs) -> Result<ModelSpec> {
        let def = if let Some(name) = &m.model {
            self.catalog.get(name)?.clone()
        } else {
            let (kind, slots): (RepresentationKind, Vec<(&str, &str)>) = if let Some(f) = &m.f {
                let mut s = vec![("f", f.as_str())];
                if let Some(g) = &m.g {
                    s.push(("g", g.as_str()));
                }
                (RepresentationKind::AB, s)
            } else if let Some(h) = &m.alpha {
                (RepresentationKind::Alpha, vec![("h", h.as_str())])
            } else if let Some(big_f) = &m.gen1d {
                (RepresentationKind::Gen1D, vec![("F", big_f.as_str())])
            } else {
                bail!("give a model with --model, --f [--g], --alpha or --gen1d");
            };
            Arc::new(ModelDef::inline(kind, &slots, m.domain.as_deref(), &self.symbols)?)
        };
        Ok(def.instantiate(self.order)?)
    }

    fn emit(&self, text: String, json: serde_json::Value) -> Result<()> {
        match self.format {
            Format::Text => print!("{text}"),
            Format::Json => println!("{}", serde_json::to_string_pretty(&json)?),
        }
        Ok(())
    }
}

fn pretty(s: &MomentumSeries) -> String {
    s.to_pretty_string()
}

fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("parameter `{p}` is not of the form name=value"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("parameter `{k}`"))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    if cli.order < 1 {
        bail!("order must be at least 1, got {}", cli.order);
    }
    let catalog = match &cli.models_dir {
        Some(d) => Catalog::with_dir(d)?,
        None => Catalog::builtin(),
    };
    let decls = cli.symbols.iter().map(|s| parse_symbol_decl(s)).collect::<igup::Result<Vec<_>>>()?;
    let ctx = Ctx {
        order: cli.order,
        format: cli.format,
        catalog,
        symbols: inline_table(&decls)?,
    };

    match cli.command {
        Command::Catalog => {
            let mut text = String::new();
            let mut rows = Vec::new();
            for d in ctx.catalog.defs() {
                let params: Vec<String> = d.params.iter().map(|p| format!("{}:{}", p.name, p.weight)).collect();
                let kind = match d.kind {
                    RepresentationKind::AB => "ab",
                    RepresentationKind::Alpha => "alpha",
                    RepresentationKind::Gen1D => "gen1d",
                };
                text.push_str(&format!("{}  [{}]  {}  {}\n", d.name, kind, params.join(" "), d.summary));
                rows.push(json!({
                    "name": d.name,
                    "aliases": d.aliases,
                    "representation": kind,
                    "params": params,
                    "summary": d.summary,
                    "closed_forms": d.closed_forms,
                }));
            }
            ctx.emit(text, json!(rows))
        }
        Command::Expand { model, position_momentum } => {
            let spec = ctx.spec(&model)?;
            let xp = spec.commutator()?;
            let xx = spec.xx()?;
            let mut text = format!(
                "model: {}\ndelta: {}\npp: {}\nxx: {}\n",
                spec.name(),
                pretty(&xp.delta),
                pretty(&xp.tensor),
                pretty(&xx.coeff)
            );
            let mut out = json!({
                "model": spec.name(),
                "order": spec.order,
                "delta": xp.delta.to_json(),
                "pp": xp.tensor.to_json(),
                "xx": xx.to_json(),
            });
            if position_momentum {
                let (f, g) = spec.f_and_g()?;
                let k = xx_position_momentum_basis(&f, &g, spec.order)?;
                text.push_str(&format!("xx_position_momentum: {}\n", pretty(&k)));
                out["xx_position_momentum"] = k.to_json();
            }
            ctx.emit(text, out)
        }
        Command::Convert { model, to } => {
            let spec = ctx.spec(&model)?;
            let map = match to {
                Family::A => alpha_to_a_map(&spec.alphas()?, spec.order)?,
                Family::B => alpha_to_b_map(&spec.alphas()?, spec.order)?,
                Family::Alpha => a_to_alpha_map(&spec.f_and_g()?.0, spec.order)?,
            };
            ctx.emit(map.to_string(), map.to_json())
        }
        Command::Extend { model, noncommutative, .. } => {
            let spec = ctx.spec(&model)?;
            let big_f = spec.generator_1d()?;
            match noncommutative {
                None => {
                    let ext = extend_1d_commutative(&big_f, spec.order)?;
                    let mut text = String::new();
                    for k in 1..=ext.h.order() {
                        text.push_str(&format!("alpha[{k}] = {}\n", ext.h.coeff(k).display(ext.h.table())));
                    }
                    text.push_str(&format!("f: {}\ng: {}\n", pretty(&ext.f), pretty(&ext.g)));
                    ctx.emit(text, ext.to_json())
                }
                Some(f_src) => {
                    let f = parse_series(&f_src, &spec.table, spec.order)?;
                    let xp = extend_1d_noncommutative(&big_f, &f)?;
                    let text = format!("delta: {}\npp: {}\n", pretty(&xp.delta), pretty(&xp.tensor));
                    ctx.emit(text, xp.to_json())
                }
            }
        }
        Command::CheckComm { model } => {
            let spec = ctx.spec(&model)?;
            let (f, g) = spec.f_and_g()?;
            let report = commutativity_check(&f, &g, spec.order)?;
            ctx.emit(report.render(), report.to_json())
        }
        Command::Table1 { max_order } => {
            if max_order < 0 {
                bail!("max order must be nonnegative");
            }
            let (table, rows) = table_one(max_order)?;
            let entries: Vec<_> = rows
                .iter()
                .enumerate()
                .flat_map(|(p, row)| {
                    let table = &table;
                    row.iter().enumerate().map(move |(n, c)| {
                        json!({ "P": p, "n": n, "coeff": c.display(table).to_string() })
                    })
                })
                .collect();
            ctx.emit(render_table_one(&table, &rows), json!(entries))
        }
        Command::MinUncertainty {
            model,
            params,
            method,
            hbar,
            points_per_decade,
            decades,
            tol,
        } => {
            let spec = ctx.spec(&model)?;
            let values = parse_params(&params)?;
            let opts = Options {
                hbar,
                points_per_decade,
                decades,
                tol,
                ..Options::default()
            };
            let method = match method {
                MethodArg::Auto if spec.def.domain.is_some() => Method::SaturationScan,
                MethodArg::Auto | MethodArg::MomentClosure => Method::MomentClosure,
                MethodArg::SaturationScan => Method::SaturationScan,
                MethodArg::Iso3d => Method::IsotropicMomentClosure,
            };
            let r = model_min(&spec, &values, method, &opts)?;
            let mut text = format!("model: {}\n{}", spec.name(), r.render());
            let mut claims = Vec::new();
            for c in &spec.def.claims {
                let Some(e) = &c.value else { continue };
                let matches_method = match c.kind {
                    igup::models::ClaimKind::Iso3D => method == Method::IsotropicMomentClosure,
                    igup::models::ClaimKind::OneD => method != Method::IsotropicMomentClosure,
                };
                if !matches_method {
                    continue;
                }
                let v = hbar * e.eval_f64(&|n| values.get(n).copied())?;
                let ratio = r.delta_x_min / v;
                let tag = if c.informational { " (informational)" } else { "" };
                text.push_str(&format!("claim: {} = {v:.9e}, ratio {ratio:.6}{tag}\n", c.text));
                claims.push(json!({ "claim": c.text, "value": v, "ratio": ratio, "informational": c.informational }));
            }
            let mut out = serde_json::to_value(&r)?;
            out["model"] = json!(spec.name());
            out["claims"] = json!(claims);
            ctx.emit(text, out)
        }
        Command::Bounds {
            dataset,
            convention,
            value,
            scope,
        } => {
            if let (Some(c), Some(v)) = (convention, value) {
                let c: Convention = c.parse()?;
                let s: Scope = scope.parse()?;
                if !(v.is_finite() && v > 0.0) {
                    bail!("bound value must be positive, got {v}");
                }
                let t = bounds::translate(c, s, v);
                let text: String = t.iter().map(|(k, x)| format!("{}: {x:.6e}\n", k.name())).collect();
                return ctx.emit(text, json!({ "convention": c, "scope": s, "value": v, "targets": t }));
            }
            let records = match dataset {
                Some(p) => {
                    let src = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    bounds::parse_dataset(&src)?
                }
                None => bounds::builtin_dataset(),
            };
            ctx.emit(bounds::render_table(&records), bounds::to_json(&records))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

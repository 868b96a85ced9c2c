//! `{{ name }}` substitution and the per-mode template set.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::history::{fixed, format_history};
use super::{HistoryBuffer, PromptContext, PromptError, PromptMode};

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z_][A-Za-z0-9_]*)\s*\}\}").unwrap())
}

/// Replaces every `{{ name }}`; an unknown name is an error.
pub fn render_template(text: &str, vars: &BTreeMap<&str, String>) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len() + 256);
    let mut last = 0;
    for cap in placeholder().captures_iter(text) {
        let whole = cap.get(0).unwrap();
        let name = &cap[1];
        let value = vars
            .get(name)
            .ok_or_else(|| PromptError::TemplateVarMissing(name.to_string()))?;
        out.push_str(&text[last..whole.start()]);
        out.push_str(value);
        last = whole.end();
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// One template text per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Templates {
    texts: HashMap<PromptMode, String>,
}

fn builtin_text(mode: PromptMode) -> &'static str {
    match mode {
        PromptMode::PropsLinear => include_str!("../../assets/templates/props-linear.txt"),
        PromptMode::PropsTabular => include_str!("../../assets/templates/props-tabular.txt"),
        PromptMode::PropsPlus => include_str!("../../assets/templates/props-plus.txt"),
        PromptMode::PropsPlusTabular => include_str!("../../assets/templates/props-plus-tabular.txt"),
        PromptMode::NumoptMin => include_str!("../../assets/templates/numopt-min.txt"),
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Templates {
    pub fn builtin() -> Self {
        Self {
            texts: PromptMode::ALL
                .into_iter()
                .map(|m| (m, builtin_text(m).to_string()))
                .collect(),
        }
    }

    /// Built-in set with `<mode>.txt` files from `dir` taking precedence.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        if !dir.is_dir() {
            return Err(PromptError::Io(format!("{} is not a directory", dir.display())));
        }
        let mut t = Self::builtin();
        for mode in PromptMode::ALL {
            let path = dir.join(format!("{}.txt", mode.as_str()));
            if path.exists() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| PromptError::Io(format!("{}: {e}", path.display())))?;
                t.texts.insert(mode, text);
            }
        }
        Ok(t)
    }

    pub fn text(&self, mode: PromptMode) -> &str {
        &self.texts[&mode]
    }

    pub fn render(
        &self,
        ctx: &PromptContext,
        history: &HistoryBuffer,
        iteration: usize,
    ) -> Result<String, PromptError> {
        ctx.validate()?;
        if iteration == 0 || iteration > ctx.max_steps {
            return Err(PromptError::InvalidContext(format!(
                "iteration {iteration} outside 1..={}",
                ctx.max_steps
            )));
        }
        if let Some(r) = history.rank() {
            if r != ctx.rank {
                return Err(PromptError::RankMismatch { expected: ctx.rank, got: r });
            }
        }
        render_template(self.text(ctx.mode), &variables(ctx, history, iteration))
    }
}

fn number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn variables<'a>(ctx: &PromptContext, history: &HistoryBuffer, iteration: usize) -> BTreeMap<&'a str, String> {
    let range_decimals = ctx.decimals.max(1);
    let actions: Vec<String> = ctx.action_set.iter().map(|a| a.to_string()).collect();
    let mut vars = BTreeMap::from([
        ("rank", ctx.rank.to_string()),
        ("last_index", (ctx.rank - 1).to_string()),
        ("low", fixed(ctx.value_range.0, range_decimals)),
        ("high", fixed(ctx.value_range.1, range_decimals)),
        ("decimals", ctx.decimals.to_string()),
        (
            "decimals_phrase",
            format!("{} decimal place{}", ctx.decimals, if ctx.decimals == 1 { "" } else { "s" }),
        ),
        ("optimum", number(ctx.optimum_hint)),
        ("step_size", format!("{:?}", ctx.step_size)),
        ("actions", format!("[{}]", actions.join(", "))),
        ("history", format_history(history, ctx.decimals)),
        ("iteration", iteration.to_string()),
        ("max_steps", ctx.max_steps.to_string()),
        (
            "hints_block",
            match &ctx.hints {
                Some(h) => format!("\n# Important hints:\n{h}\n"),
                None => String::new(),
            },
        ),
    ]);
    if let Some(d) = &ctx.env_description {
        vars.insert("env_description", d.clone());
    }
    vars
}

/// Renders with the built-in templates.
pub fn render(ctx: &PromptContext, history: &HistoryBuffer, iteration: usize) -> Result<String, PromptError> {
    Templates::builtin().render(ctx, history, iteration)
}

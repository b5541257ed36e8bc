//! Line-oriented command interpreter shared by interactive and batch modes.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use qiq_core::{BeliefNetwork, Session};

pub const HELP: &str = "\
Commands:
  load FILE                       replace the network (clears evidence)
  observe VAR[=true|false]        record a finding (default true)
  retract VAR                     remove a finding
  show evidence                   list current findings
  p VAR                           posterior probability with a verbal phrase
  why VAR                         scenario explanation
  impact VAR [on TARGET]          qualitative effect of observing VAR
  describe [--dependencies] [--compare-priors] [--scale NAME] [--no-numbers]
  set PARAM VALUE                 list-threshold, residual-cap, contrast-factor, but-threshold
  scale NAME [VAR]                choose a probability phrase scale
  numbers on|off                  show or hide numbers in explanations
  help                            this text
  quit                            leave
";

pub enum Outcome {
    Output(String),
    Quit,
}

pub struct Repl {
    pub session: Session,
    /// Target of the last `p` or `why`, used by a bare `impact VAR`.
    last_target: Option<String>,
}

impl Repl {
    pub fn new(session: Session) -> Self {
        Repl {
            session,
            last_target: None,
        }
    }

    /// Runs one command. A failing command leaves the session untouched.
    pub fn execute(&mut self, line: &str) -> Result<Outcome> {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            return Ok(Outcome::Output(String::new()));
        }
        let (cmd, rest) = match line.split_once(char::is_whitespace) {
            Some((c, r)) => (c, r.trim()),
            None => (line, ""),
        };
        let out = match cmd.to_ascii_lowercase().as_str() {
            "quit" | "exit" => return Ok(Outcome::Quit),
            "help" | "?" => HELP.to_string(),
            "load" => self.load(rest)?,
            "observe" => self.observe(rest)?,
            "retract" => {
                let name = required(rest, "retract VAR")?;
                self.session.retract(name)?;
                line_of(format!("Retracted {}.", self.label(name)?))
            }
            "show" => match rest {
                "evidence" => self.show_evidence(),
                _ => bail!("usage: show evidence"),
            },
            "p" => {
                let name = required(rest, "p VAR")?;
                let report = self.session.posterior(name)?;
                self.last_target = Some(report.target.clone());
                line_of(report.text)
            }
            "why" => {
                let name = required(rest, "why VAR")?;
                let doc = self.session.why(name)?;
                self.last_target = Some(doc.target.clone());
                doc.render()
            }
            "impact" => self.impact(rest)?,
            "describe" => self.describe(rest)?,
            "set" => {
                let usage = "set PARAM VALUE";
                let (param, value) = required(rest, usage)?
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| anyhow!("usage: {usage}"))?;
                let value: f64 = value.trim().parse().with_context(|| format!("not a number: `{}`", value.trim()))?;
                self.session.set_param(param, value)?;
                line_of(format!("{param} = {value}"))
            }
            "scale" => {
                let usage = "scale NAME [VAR]";
                let rest = required(rest, usage)?;
                let (name, var) = match rest.split_once(char::is_whitespace) {
                    Some((n, v)) => (n, Some(v.trim())),
                    None => (rest, None),
                };
                self.session.set_scale(name, var)?;
                match var {
                    Some(v) => line_of(format!("Scale {name} for {}.", self.label(v)?)),
                    None => line_of(format!("Scale {name}.")),
                }
            }
            "numbers" => {
                let on = match rest {
                    "on" => true,
                    "off" => false,
                    _ => bail!("usage: numbers on|off"),
                };
                self.session.set_numbers(on);
                line_of(format!("Numbers {rest}."))
            }
            other => bail!("unknown command `{other}` (try `help`)"),
        };
        Ok(Outcome::Output(out))
    }

    fn label(&self, name: &str) -> Result<String> {
        let v = self.session.resolve(name)?;
        Ok(self.session.network().label(v).to_string())
    }

    fn load(&mut self, path: &str) -> Result<String> {
        let path = required(path, "load FILE")?;
        let net = load_network(Path::new(path))?;
        let n = net.len();
        self.session.load(Arc::new(net));
        self.last_target = None;
        Ok(line_of(format!("Loaded {n} variables from {path}.")))
    }

    fn observe(&mut self, rest: &str) -> Result<String> {
        let rest = required(rest, "observe VAR[=true|false]")?;
        let (name, value) = match rest.split_once('=') {
            Some((n, v)) => (n.trim(), parse_bool(v.trim())?),
            None => (rest, true),
        };
        self.session.observe(name, value)?;
        let v = self.session.resolve(name)?;
        Ok(line_of(format!("Observed {}.", self.session.network().variable(v).reading(value))))
    }

    fn show_evidence(&self) -> String {
        let net = self.session.network();
        let readings = self.session.readings();
        if readings.is_empty() {
            return line_of("No evidence.".to_string());
        }
        let mut out = String::new();
        for (name, value) in readings {
            let v = net.id(&name).expect("reading names come from the network");
            let _ = writeln!(out, "{name} = {value}\t({})", net.variable(v).reading(value));
        }
        out
    }

    fn impact(&self, rest: &str) -> Result<String> {
        let rest = required(rest, "impact VAR [on TARGET]")?;
        let (finding, target) = match split_word(rest, "on") {
            Some((f, t)) => (f, t.to_string()),
            None => {
                let t = self
                    .last_target
                    .clone()
                    .ok_or_else(|| anyhow!("no target yet; use `impact VAR on TARGET`"))?;
                (rest, t)
            }
        };
        Ok(self.session.impact(finding, &target)?.text)
    }

    fn describe(&self, rest: &str) -> Result<String> {
        let mut session = self.session.clone();
        let (mut deps, mut compare) = (false, false);
        let mut words = rest.split_whitespace();
        while let Some(flag) = words.next() {
            match flag {
                "--dependencies" => deps = true,
                "--compare-priors" => compare = true,
                "--no-numbers" => session.set_numbers(false),
                "--scale" => {
                    let name = words.next().ok_or_else(|| anyhow!("--scale needs a NAME"))?;
                    session.set_scale(name, None)?;
                }
                other => bail!("unknown describe flag `{other}`"),
            }
        }
        Ok(session.describe(deps, compare)?.into_iter().map(|s| s + "\n").collect())
    }
}

pub fn load_network(path: &Path) -> Result<BeliefNetwork> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    BeliefNetwork::from_json(&text).with_context(|| format!("invalid network in {}", path.display()))
}

fn line_of(s: String) -> String {
    s + "\n"
}

fn required<'a>(rest: &'a str, usage: &str) -> Result<&'a str> {
    if rest.is_empty() {
        bail!("usage: {usage}");
    }
    Ok(rest)
}

fn parse_bool(s: &str) -> Result<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "t" | "yes" | "1" => Ok(true),
        "false" | "f" | "no" | "0" => Ok(false),
        _ => bail!("expected true or false, got `{s}`"),
    }
}

/// Splits `text` around the standalone word `word`, e.g. "paw marks on cold".
fn split_word<'a>(text: &'a str, word: &str) -> Option<(&'a str, &'a str)> {
    let pat = format!(" {word} ");
    text.rfind(&pat).map(|i| (text[..i].trim(), text[i + pat.len()..].trim()))
}

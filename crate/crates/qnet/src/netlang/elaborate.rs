use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::ast::*;
use crate::catalog::{instantiate, ComponentSpec, Value};
use crate::error::{Error, Result};
use crate::hilbert::LocalState;
use crate::slh::{concat, feedback_multi, permute_ports, PortSide, SlhTriple};

type C64 = Complex64;

/// External port of an elaborated network, with the instance ports it
/// connects (1-based indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortInfo {
    pub label: String,
    pub output: (String, usize),
    pub input: (String, usize),
}

#[derive(Clone, Debug)]
pub struct Elaborated {
    pub triple: SlhTriple,
    pub ports: Vec<PortInfo>,
    pub params: BTreeMap<String, C64>,
}

impl Elaborated {
    pub fn port_index(&self, label: &str) -> Option<usize> {
        self.ports.iter().position(|p| p.label == label)
    }
}

fn at(span: Span, msg: impl std::fmt::Display) -> Error {
    Error::Elaboration(format!("{span}: {msg}"))
}

pub fn elaborate(net: &NetworkDescription) -> Result<Elaborated> {
    elaborate_with(net, &BTreeMap::new())
}

/// Elaborates with `param` values replaced by `overrides`.
pub fn elaborate_with(net: &NetworkDescription, overrides: &BTreeMap<String, f64>) -> Result<Elaborated> {
    if net.instances.is_empty() {
        return Err(Error::Elaboration("network declares no components".into()));
    }
    for k in overrides.keys() {
        if !net.params.iter().any(|p| &p.name == k) {
            return Err(Error::Elaboration(format!("no parameter '{k}' to override")));
        }
    }
    let mut env = BTreeMap::new();
    for p in &net.params {
        let v = match overrides.get(&p.name) {
            Some(x) => C64::new(*x, 0.0),
            None => match eval(&p.value, &env)? {
                Value::Num(c) => c,
                _ => return Err(at(p.span, format!("parameter '{}' must be numeric", p.name))),
            },
        };
        env.insert(p.name.clone(), v);
    }

    // mode_loss instances refer to modes of other instances and are built last
    let mut built: Vec<Option<SlhTriple>> = vec![None; net.instances.len()];
    for pass in 0..2 {
        for (k, c) in net.instances.iter().enumerate() {
            if (c.kind == "mode_loss") != (pass == 1) {
                continue;
            }
            let mut spec = ComponentSpec::new(&c.kind, &c.name);
            for a in &c.args {
                let name = a.name.clone().expect("component args are named");
                spec = spec.with(&name, eval(&a.value, &env)?);
            }
            if c.kind == "mode_loss" {
                fill_mode_trunc(&mut spec, c, &built)?;
            }
            let g = instantiate(&spec).map_err(|e| at(c.span, format!("{}: {}", c.name, strip(e))))?;
            let names = (1..=g.n_ports()).map(|i| format!("{}.{i}", c.name)).collect();
            built[k] = Some(g.with_ports(names)?);
        }
    }
    let parts: Vec<SlhTriple> = built.into_iter().map(|g| g.expect("every instance built")).collect();
    let mut offsets = Vec::with_capacity(parts.len());
    let mut total = 0;
    for g in &parts {
        offsets.push(total);
        total += g.n_ports();
    }
    let mut whole = parts[0].clone();
    for g in &parts[1..] {
        whole = concat(&whole, g)?;
    }
    whole.metadata.clear();
    whole.metadata.insert(
        "instances".into(),
        net.instances.iter().map(|c| format!("{}:{}", c.name, c.kind)).collect::<Vec<_>>().join(","),
    );

    for s in &net.states {
        let k = net.instances.iter().position(|c| c.name == s.instance).expect("checked by parser");
        apply_state(&mut whole, &parts[k], s, &env)?;
    }

    let global = |p: &PortRef| -> Result<usize> {
        let k = net.instances.iter().position(|c| c.name == p.instance).expect("checked by parser");
        let n = parts[k].n_ports();
        if p.index > n {
            return Err(at(p.span, format!("{p}: '{}' has {n} port(s)", p.instance)));
        }
        Ok(offsets[k] + p.index - 1)
    };
    let local = |g: usize| -> (String, usize) {
        let k = offsets.iter().rposition(|&o| o <= g).expect("offset 0 exists");
        (net.instances[k].name.clone(), g - offsets[k] + 1)
    };

    let wiring = net.wires.iter().map(|w| Ok((global(&w.src)?, global(&w.dst)?))).collect::<Result<Vec<_>>>()?;
    let reduced = feedback_multi(&whole, &wiring).map_err(|e| match e {
        Error::AlgebraicLoop(_) => Error::AlgebraicLoop(format!(
            "I − S_XY is singular for the wires {}",
            net.wires.iter().map(|w| format!("[{w}]")).collect::<Vec<_>>().join(", ")
        )),
        other => other,
    })?;

    let order = external_order(net, &reduced.outputs, &reduced.inputs, &global)?;
    let sigma_out: Vec<usize> =
        order.iter().map(|(o, _, _)| reduced.outputs.iter().position(|x| x == o).expect("survivor")).collect();
    let sigma_in: Vec<usize> =
        order.iter().map(|(_, i, _)| reduced.inputs.iter().position(|x| x == i).expect("survivor")).collect();
    let mut triple = permute_ports(&reduced.triple, &sigma_out, PortSide::Outputs)?;
    triple = permute_ports(&triple, &sigma_in, PortSide::Inputs)?;

    let ports: Vec<PortInfo> = order
        .iter()
        .map(|(o, i, label)| {
            let (output, input) = (local(*o), local(*i));
            let label = label.clone().unwrap_or_else(|| {
                if output == input {
                    format!("{}.{}", output.0, output.1)
                } else {
                    format!("{}.{}>{}.{}", output.0, output.1, input.0, input.1)
                }
            });
            PortInfo { label, output, input }
        })
        .collect();
    triple.set_ports(ports.iter().map(|p| p.label.clone()).collect());
    Ok(Elaborated { triple, ports, params: env })
}

fn strip(e: Error) -> String {
    match e {
        Error::Validation(m) | Error::Construction(m) => m,
        other => other.to_string(),
    }
}

type Order = Vec<(usize, usize, Option<String>)>;

/// External ports as (output, input, label). Outputs and inputs exposed
/// under one label form a port; the rest pair up by rank.
fn external_order(
    net: &NetworkDescription,
    outs: &[usize],
    ins: &[usize],
    global: &dyn Fn(&PortRef) -> Result<usize>,
) -> Result<Order> {
    let mut labels: Vec<(String, Option<usize>, Option<usize>)> = Vec::new();
    for e in &net.exposed {
        let g = global(&e.port)?;
        let slot = match labels.iter().position(|(l, _, _)| *l == e.label) {
            Some(k) => k,
            None => {
                labels.push((e.label.clone(), None, None));
                labels.len() - 1
            }
        };
        let side = match e.port.dir {
            Dir::Out => &mut labels[slot].1,
            Dir::In => &mut labels[slot].2,
        };
        if side.is_some() {
            return Err(at(e.port.span, format!("label '{}' already names an {:?} port", e.label, e.port.dir)));
        }
        *side = Some(g);
    }
    let full: Vec<(usize, usize)> = labels.iter().filter_map(|(_, o, i)| Some(((*o)?, (*i)?))).collect();
    let rest_out: Vec<usize> = outs.iter().copied().filter(|o| !full.iter().any(|f| f.0 == *o)).collect();
    let rest_in: Vec<usize> = ins.iter().copied().filter(|i| !full.iter().any(|f| f.1 == *i)).collect();
    let rank: Vec<(usize, usize)> = rest_out.into_iter().zip(rest_in).collect();
    let mut rank_label: Vec<Option<String>> = vec![None; rank.len()];
    let mut out: Order = Vec::new();
    for (label, o, i) in &labels {
        match (o, i) {
            (Some(o), Some(i)) => out.push((*o, *i, Some(label.clone()))),
            _ => {
                let k = rank
                    .iter()
                    .position(|(ro, ri)| Some(ro) == o.as_ref() || Some(ri) == i.as_ref())
                    .expect("exposed ports are survivors");
                if let Some(prev) = &rank_label[k] {
                    return Err(Error::Elaboration(format!(
                        "ports labelled '{prev}' and '{label}' pair into the same external port"
                    )));
                }
                rank_label[k] = Some(label.clone());
                out.push((rank[k].0, rank[k].1, Some(label.clone())));
            }
        }
    }
    for (k, (o, i)) in rank.iter().enumerate() {
        if rank_label[k].is_none() {
            out.push((*o, *i, None));
        }
    }
    Ok(out)
}

fn fill_mode_trunc(spec: &mut ComponentSpec, c: &Component, built: &[Option<SlhTriple>]) -> Result<()> {
    let Some(Value::Ident(mode)) = spec.params.get("mode").cloned() else {
        return Err(at(c.span, format!("{}: 'mode' must name a mode", c.name)));
    };
    let factor = built.iter().flatten().find_map(|g| g.space().factor(&mode).cloned());
    match factor {
        Some(f) => {
            if !spec.params.contains_key("trunc") {
                spec.params.insert("trunc".into(), Value::from(f.dim as f64));
            }
            Ok(())
        }
        None => Err(at(c.span, format!("{}: no component declares a mode '{mode}'", c.name))),
    }
}

fn apply_state(whole: &mut SlhTriple, part: &SlhTriple, s: &StateDecl, env: &BTreeMap<String, C64>) -> Result<()> {
    let labels: Vec<String> = part.space().labels().iter().map(|l| l.to_string()).collect();
    let states: Vec<LocalState> = if s.factors.len() == 1 && matches!(s.factors[0].0, StateFactor::Vacuum) {
        vec![LocalState::Vacuum; labels.len()]
    } else {
        if s.factors.len() != labels.len() {
            return Err(at(
                s.span,
                format!(
                    "'{}' has {} mode(s) ({}), state lists {}",
                    s.instance,
                    labels.len(),
                    labels.join(", "),
                    s.factors.len()
                ),
            ));
        }
        s.factors
            .iter()
            .map(|(f, span)| {
                Ok(match f {
                    StateFactor::Vacuum => LocalState::Vacuum,
                    StateFactor::Qubit { excited } => LocalState::Qubit { excited: *excited },
                    StateFactor::Fock(e) => match eval(e, env)? {
                        Value::Num(c) if c.im == 0.0 && c.re >= 0.0 && c.re.fract() == 0.0 => {
                            LocalState::Fock(c.re as usize)
                        }
                        _ => return Err(at(*span, "fock(n) needs a non-negative integer")),
                    },
                    StateFactor::Coherent(e) => match eval(e, env)? {
                        Value::Num(c) => LocalState::Coherent(c),
                        _ => return Err(at(*span, "coherent(α) needs a number")),
                    },
                })
            })
            .collect::<Result<_>>()?
    };
    for (label, st) in labels.into_iter().zip(states) {
        if let Some(f) = part.space().factor(&label) {
            st.ket(f).map_err(|e| at(s.span, strip(e)))?;
        }
        whole.initial.retain(|(l, _)| *l != label);
        whole.initial.push((label, st));
    }
    Ok(())
}

/// Evaluates an expression; names that are not parameters or constants
/// become identifiers.
pub fn eval(e: &Expr, env: &BTreeMap<String, C64>) -> Result<Value> {
    let num = |x: &Expr| -> Result<C64> {
        match eval(x, env)? {
            Value::Num(c) => Ok(c),
            other => Err(at(x.span, format!("expected a number, got {other:?}"))),
        }
    };
    Ok(match &e.kind {
        ExprKind::Num(x) => Value::Num(C64::new(*x, 0.0)),
        ExprKind::Imag(x) => Value::Num(C64::new(0.0, *x)),
        ExprKind::Name(n) => match (env.get(n), n.as_str()) {
            (Some(v), _) => Value::Num(*v),
            (None, "pi") => Value::Num(C64::new(PI, 0.0)),
            (None, "i" | "j") => Value::Num(C64::new(0.0, 1.0)),
            _ => Value::Ident(n.clone()),
        },
        ExprKind::Neg(x) => Value::Num(-num(x)?),
        ExprKind::Binary { op, lhs, rhs } => {
            let (a, b) = (num(lhs)?, num(rhs)?);
            Value::Num(match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b.norm() == 0.0 {
                        return Err(at(e.span, "division by zero"));
                    }
                    a / b
                }
                BinOp::Pow => {
                    if b.im == 0.0 && b.re.fract() == 0.0 && b.re.abs() < 1e9 {
                        a.powi(b.re as i32)
                    } else if a.im == 0.0 && a.re >= 0.0 && b.im == 0.0 {
                        C64::new(a.re.powf(b.re), 0.0)
                    } else {
                        a.powc(b)
                    }
                }
            })
        }
        ExprKind::Call { name, args } => {
            let unary = matches!(name.as_str(), "sqrt" | "exp" | "sin" | "cos" | "abs" | "conj" | "re" | "im");
            if unary {
                if args.len() != 1 || args[0].name.is_some() {
                    return Err(at(e.span, format!("{name} takes one positional argument")));
                }
                let x = num(&args[0].value)?;
                let real = x.im == 0.0;
                Value::Num(match name.as_str() {
                    "sqrt" if real && x.re >= 0.0 => C64::new(x.re.sqrt(), 0.0),
                    "sqrt" => x.sqrt(),
                    "exp" => x.exp(),
                    "sin" => x.sin(),
                    "cos" => x.cos(),
                    "abs" => C64::new(x.norm(), 0.0),
                    "conj" => x.conj(),
                    "re" => C64::new(x.re, 0.0),
                    _ => C64::new(x.im, 0.0),
                })
            } else {
                let mut out = Vec::with_capacity(args.len());
                for a in args {
                    let Some(n) = &a.name else {
                        return Err(at(a.span, format!("arguments of {name}(...) must be written key=value")));
                    };
                    out.push((n.clone(), eval(&a.value, env)?));
                }
                Value::Call { name: name.clone(), args: out }
            }
        }
        ExprKind::List(items) => Value::List(items.iter().map(|x| eval(x, env)).collect::<Result<_>>()?),
    })
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse;
    use super::*;
    use crate::catalog::one_sided_cavity;
    use crate::slh::series;

    #[test]
    fn single_component_unchanged() {
        let e = elaborate(&parse("component c = one_sided_cavity(gamma=2, delta=0.5, trunc=4);").unwrap()).unwrap();
        assert!(e.triple.approx_eq(&one_sided_cavity("c", 2.0, 0.5, 4).unwrap(), 0.0));
        assert_eq!(e.ports[0].label, "c.1");
    }

    #[test]
    fn cascade_is_series_product() {
        let src = "param g = 1.5;
component c1 = one_sided_cavity(gamma=g, delta=0.3, trunc=4);
component c2 = one_sided_cavity(gamma=2*g, trunc=4);
wire c1.out[1] -> c2.in[1];
expose c1.in[1] as input;";
        let e = elaborate(&parse(src).unwrap()).unwrap();
        let want = series(&one_sided_cavity("c2", 3.0, 0.0, 4).unwrap(), &one_sided_cavity("c1", 1.5, 0.3, 4).unwrap())
            .unwrap();
        assert!(e.triple.approx_eq(&want, 1e-12));
        assert_eq!(e.triple.ports(), ["input"]);
        assert_eq!(e.ports[0].output, ("c2".to_string(), 1));

        let over = elaborate_with(&parse(src).unwrap(), &[("g".to_string(), 1.0)].into()).unwrap();
        assert!((over.params["g"].re - 1.0).abs() == 0.0);
        assert!(elaborate_with(&parse(src).unwrap(), &[("nope".to_string(), 1.0)].into()).is_err());
    }

    #[test]
    fn algebraic_loop_names_wires() {
        let src = "component p = phase_shifter(phi=0); wire p.out[1] -> p.in[1];";
        let err = elaborate(&parse(src).unwrap()).unwrap_err();
        assert!(matches!(err, Error::AlgebraicLoop(_)));
        assert!(err.to_string().contains("[p.out[1] -> p.in[1]]"), "{err}");
    }

    #[test]
    fn states_and_mode_loss() {
        let src = "component jc = jaynes_cummings(kappa=1, g=0.5, trunc=5);
component loss = mode_loss(mode=jc.a, rate=0.1);
state jc = fock(2) * qubit(excited);";
        let e = elaborate(&parse(src).unwrap()).unwrap();
        assert_eq!(e.triple.n_ports(), 2);
        assert_eq!(e.triple.space().dims(), vec![5, 2]);
        assert!(e.triple.initial.contains(&("jc.a".to_string(), LocalState::Fock(2))));
        assert!(e.triple.initial.contains(&("jc.q".to_string(), LocalState::Qubit { excited: true })));

        let bad = "component jc = jaynes_cummings(kappa=1, g=0.5); state jc = fock(1);";
        assert!(elaborate(&parse(bad).unwrap()).unwrap_err().to_string().contains("2 mode(s)"));
        let range = "component c = phase_shifter(phi=0); wire c.out[2] -> c.in[1];";
        assert!(elaborate(&parse(range).unwrap()).unwrap_err().to_string().contains("1:42"));
    }
}

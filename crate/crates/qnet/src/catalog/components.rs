use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::params::{ComponentSpec, KindSchema, ParamSchema, ParamType, Params};
use crate::error::{Error, Result};
use crate::hilbert::elementary::{spin_lower, spin_z, Elementary};
use crate::hilbert::{Factor, FactorKind, LabeledSpace, LocalState, Operator};
use crate::slh::SlhTriple;
use crate::tol::TOL_OP;

type C64 = Complex64;

const DEFAULT_TRUNC: usize = 8;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn one() -> Operator {
    Operator::scalar(re(1.0))
}

fn scalar_zero() -> Operator {
    Operator::zero(&LabeledSpace::scalar())
}

fn unit_s(n: usize) -> Vec<Vec<Operator>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { one() } else { Operator::scalar(re(0.0)) }).collect()).collect()
}

/// Ladder operators `(a, a†, a†a)` on an oscillator factor.
pub(crate) fn ladder(label: &str, dim: usize) -> Result<(Operator, Operator, Operator)> {
    let f = Factor::oscillator(label, dim);
    Ok((Elementary::Annihilation.on(&f)?, Elementary::Creation.on(&f)?, Elementary::Number.on(&f)?))
}

/// `(σ−, σ+, σz)` on a qubit factor.
pub(crate) fn qubit(label: &str) -> Result<(Operator, Operator, Operator)> {
    let f = Factor::qubit(label);
    Ok((Elementary::SigmaMinus.on(&f)?, Elementary::SigmaPlus.on(&f)?, Elementary::PauliZ.on(&f)?))
}

fn sub(inst: &str, local: &str) -> String {
    format!("{inst}.{local}")
}

fn finish(g: SlhTriple, spec: &ComponentSpec) -> SlhTriple {
    g.with_meta("kind", spec.kind.clone()).with_meta("instance", spec.name.clone())
}

fn check_unitary(s: &[Vec<C64>], kind: &str) -> Result<()> {
    let n = s.len();
    let m = DMatrix::from_fn(n, n, |i, j| s[i][j]);
    let r = (m.adjoint() * &m - DMatrix::identity(n, n)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if r > TOL_OP {
        return Err(Error::Validation(format!("{kind}: violated S†S = I (residual {r:.3e})")));
    }
    Ok(())
}

macro_rules! param {
    ($name:expr, $ty:ident, req, $doc:expr) => {
        ParamSchema { name: $name, ty: ParamType::$ty, required: true, default: None, doc: $doc }
    };
    ($name:expr, $ty:ident, opt, $doc:expr) => {
        ParamSchema { name: $name, ty: ParamType::$ty, required: false, default: None, doc: $doc }
    };
    ($name:expr, $ty:ident, $def:expr, $doc:expr) => {
        ParamSchema { name: $name, ty: ParamType::$ty, required: false, default: Some($def), doc: $doc }
    };
}

/// Parameter schema of every catalog kind.
pub fn schema() -> Vec<KindSchema> {
    let trunc = || param!("trunc", Int, "8", "oscillator truncation dimension");
    vec![
        KindSchema {
            kind: "phase_shifter",
            ports: Some(1),
            params: vec![param!("phi", Real, req, "phase shift (rad)")],
            one_of: vec![],
            doc: "(e^{iφ}, 0, 0)",
        },
        KindSchema {
            kind: "beamsplitter",
            ports: Some(2),
            params: vec![
                param!("eta", Real, opt, "amplitude reflectivity, S = [[√(1−η²), −η], [η, √(1−η²)]]"),
                param!("theta", Real, opt, "mixing angle, S = [[cos θ, −sin θ], [sin θ, cos θ]]"),
                param!("r11", Complex, opt, "explicit S entry"),
                param!("t12", Complex, opt, "explicit S entry"),
                param!("t21", Complex, opt, "explicit S entry"),
                param!("r22", Complex, opt, "explicit S entry"),
            ],
            one_of: vec![vec!["eta", "theta", "r11"]],
            doc: "static two-port scattering",
        },
        KindSchema {
            kind: "coherent_source",
            ports: Some(1),
            params: vec![
                param!("alpha", Complex, req, "amplitude (s^-1/2 when constant, photons^1/2 with an envelope)"),
                param!("envelope", Envelope, opt, "wavepacket ξ(t); α(t) = α ξ(t)"),
            ],
            one_of: vec![],
            doc: "(1, α(t), 0)",
        },
        KindSchema {
            kind: "one_sided_cavity",
            ports: Some(1),
            params: vec![
                param!("gamma", Real, opt, "decay rate"),
                param!("kappa", Real, opt, "decay rate (alias)"),
                param!("delta", Real, "0", "detuning"),
                trunc(),
            ],
            one_of: vec![vec!["gamma", "kappa"]],
            doc: "(I, √γ a, Δ a†a)",
        },
        KindSchema {
            kind: "kerr_cavity",
            ports: Some(1),
            params: vec![
                param!("gamma", Real, opt, "decay rate"),
                param!("kappa", Real, opt, "decay rate (alias)"),
                param!("delta", Real, "0", "detuning"),
                param!("chi", Real, req, "Kerr coefficient"),
                trunc(),
            ],
            one_of: vec![vec!["gamma", "kappa"]],
            doc: "(I, √κ a, Δ a†a + χ a†a a†a)",
        },
        KindSchema {
            kind: "fabry_perot",
            ports: Some(2),
            params: vec![
                param!("kappa1", Real, req, "mirror 1 decay rate"),
                param!("kappa2", Real, req, "mirror 2 decay rate"),
                param!("delta", Real, "0", "detuning"),
                param!("phase1", Real, "0", "coupling phase of port 1"),
                param!("phase2", Real, "0", "coupling phase of port 2"),
                trunc(),
            ],
            one_of: vec![],
            doc: "(I₂, [√κ₁ e^{iφ₁} a; √κ₂ e^{iφ₂} a], Δ a†a)",
        },
        KindSchema {
            kind: "cross_kerr_cavities",
            ports: Some(2),
            params: vec![
                param!("kappa1", Real, req, "decay rate of a1"),
                param!("kappa2", Real, req, "decay rate of a2"),
                param!("delta1", Real, "0", "detuning of a1"),
                param!("delta2", Real, "0", "detuning of a2"),
                param!("chi", Real, req, "cross-Kerr coefficient"),
                trunc(),
            ],
            one_of: vec![],
            doc: "(I₂, [√κ₁a₁; √κ₂a₂], Δ₁a₁†a₁ + Δ₂a₂†a₂ + χ a₁†a₁a₂†a₂)",
        },
        KindSchema {
            kind: "degenerate_opo",
            ports: Some(1),
            params: vec![
                param!("kappa", Real, req, "decay rate"),
                param!("e", Complex, req, "nonlinearity E"),
                param!("delta", Real, "0", "detuning"),
                trunc(),
            ],
            one_of: vec![],
            doc: "(I, √κ a, Δ a†a + (i/2)(E a†² − E* a²))",
        },
        KindSchema {
            kind: "squeezed_source",
            ports: Some(1),
            params: vec![param!("gamma", Real, req, "bandwidth"), param!("e", Complex, req, "pump E"), trunc()],
            one_of: vec![],
            doc: "(I, √γ a, (i/2)(E a†² − E* a²))",
        },
        KindSchema {
            kind: "two_mode_squeezer",
            ports: Some(2),
            params: vec![
                param!("kappa1", Real, req, "decay rate of a1"),
                param!("kappa2", Real, req, "decay rate of a2"),
                param!("epsilon", Complex, req, "pump strength"),
                param!("delta_p", Real, "0", "pump frequency (0 selects the rotating frame)"),
                trunc(),
            ],
            one_of: vec![],
            doc: "(I₂, [√κ₁a₁; √κ₂a₂], (i/2)(ε e^{−iΔp t} a₁†a₂† − ε* e^{iΔp t} a₁a₂))",
        },
        KindSchema {
            kind: "optomechanics",
            ports: Some(3),
            params: optomech_params(),
            one_of: vec![],
            doc: "radiation-pressure coupling −g a†a (b + b†)",
        },
        KindSchema {
            kind: "optomechanics_linearized",
            ports: Some(3),
            params: optomech_params(),
            one_of: vec![],
            doc: "linearized coupling g (a + a†)(b + b†)",
        },
        KindSchema {
            kind: "tla_waveguide",
            ports: Some(2),
            params: vec![
                param!("kappa_g", Real, req, "waveguide coupling rate"),
                param!("kappa_perp", Real, "0", "non-guided loss rate"),
                param!("omega", Real, "0", "atomic detuning Ω"),
            ],
            one_of: vec![],
            doc: "(I₂, [√κ_g σ−; √κ_⊥ σ−], ½Ω σz)",
        },
        KindSchema {
            kind: "trapped_tla",
            ports: Some(3),
            params: vec![
                param!("kappa_r", Real, req, "right-moving coupling"),
                param!("kappa_l", Real, req, "left-moving coupling"),
                param!("kappa_perp", Real, "0", "non-guided loss rate"),
                param!("omega", Real, "0", "atomic detuning Ω"),
                param!("k0", Real, req, "carrier wave number"),
                param!("mass", Real, req, "atomic mass"),
                param!("nu", Real, req, "trap frequency"),
                trunc(),
            ],
            one_of: vec![],
            doc: "two-level atom with harmonic motion; x, p built from the truncated motional mode",
        },
        KindSchema {
            kind: "rabi",
            ports: Some(1),
            params: atom_cavity_params(false),
            one_of: vec![],
            doc: "(I, √κ a, Δc a†a + ½Ω σz + g σx (a + a†))",
        },
        KindSchema {
            kind: "jaynes_cummings",
            ports: None,
            params: atom_cavity_params(true),
            one_of: vec![],
            doc: "(I, √κ a, Δc a†a + ½Ω σz + g (σ− a† + σ+ a)); gamma adds a port √γ σ−",
        },
        KindSchema {
            kind: "tavis_cummings",
            ports: Some(1),
            params: {
                let mut p = atom_cavity_params(false);
                p.push(param!("n_atoms", Int, req, "number of atoms N (spin N/2)"));
                p
            },
            one_of: vec![],
            doc: "(I, √κ a, Δc a†a + ½Ω Jz + g (J− a† + J+ a)) with Jz = Σσz",
        },
        KindSchema {
            kind: "circulator_ideal",
            ports: None,
            params: vec![param!("ports", Int, "3", "number of ports")],
            one_of: vec![],
            doc: "S_{j,j−1} = 1",
        },
        KindSchema {
            kind: "circulator_nonideal",
            ports: None,
            params: vec![
                param!("r", Complex, req, "reflection"),
                param!("b", Complex, req, "isolation error"),
                param!("t", Complex, req, "transmission"),
                param!("c", Complex, opt, "second isolation error; selects the 4-port form"),
            ],
            one_of: vec![],
            doc: "circulant scattering matrix [[r, b, t], [t, r, b], [b, t, r]]",
        },
        KindSchema {
            kind: "circulator_finite_bw",
            ports: Some(3),
            params: vec![
                param!("gamma", Real, req, "cavity decay rate"),
                param!("delta", Real, "0", "cavity detuning"),
                param!("t", Real, opt, "hopping (default γ/2)"),
                param!("phi", Real, opt, "hopping phase (default −π/2)"),
                trunc(),
            ],
            one_of: vec![],
            doc: "three cavities on a ring, H = Σ Δ b†b + t(b₁†b₃ + e^{iφ} b₂†b₁ + b₃†b₂ + h.c.)",
        },
        KindSchema {
            kind: "coherent_source_cavity",
            ports: Some(1),
            params: vec![
                param!("alpha", Complex, req, "wavepacket amplitude"),
                param!("envelope", Envelope, req, "wavepacket ξ(t)"),
                trunc(),
            ],
            one_of: vec![],
            doc: "(I, λ(t) a, 0) prepared in |α⟩",
        },
        KindSchema {
            kind: "fock_source",
            ports: Some(1),
            params: vec![
                param!("n", Int, req, "photon number"),
                param!("envelope", Envelope, req, "wavepacket ξ(t)"),
                param!("trunc", Int, opt, "truncation (default n + 1)"),
            ],
            one_of: vec![],
            doc: "(I, λ(t) a, 0) prepared in |n⟩",
        },
        KindSchema {
            kind: "loss_beamsplitter",
            ports: Some(2),
            params: vec![param!("eta", Real, req, "power loss fraction")],
            one_of: vec![],
            doc: "[[√(1−η), −√η], [√η, √(1−η)]]; port 2 is the fictitious loss channel",
        },
        KindSchema {
            kind: "mode_loss",
            ports: Some(1),
            params: vec![
                param!("mode", Ident, req, "factor label of the lossy mode"),
                param!("rate", Real, req, "loss rate λ"),
                param!("trunc", Int, opt, "truncation of the mode (inferred when elaborated)"),
            ],
            one_of: vec![],
            doc: "(I, √λ a, 0) on an existing mode",
        },
        KindSchema {
            kind: "dispersion_cavity",
            ports: Some(1),
            params: vec![
                param!("phi", Real, "0", "static phase"),
                param!("gamma_d", Real, opt, "decay rate"),
                param!("omega_d", Real, opt, "detuning"),
                param!("delta_d", Real, opt, "sets γd = √12 Δd and ωd = ωc − Δd"),
                param!("omega_c", Real, opt, "carrier frequency (with delta_d)"),
                trunc(),
            ],
            one_of: vec![vec!["gamma_d", "delta_d"]],
            doc: "(e^{iφ}, √γd a, ωd a†a)",
        },
        KindSchema {
            kind: "cavity_chain",
            ports: Some(1),
            params: vec![
                param!("betas", RealList, req, "coupling rates β_k"),
                param!("detunings", RealList, req, "detunings ξ_k"),
                trunc(),
            ],
            one_of: vec![],
            doc: "series of N cavities (I, √β_k a_k, ξ_k a_k†a_k)",
        },
        KindSchema {
            kind: "counterprop_pair",
            ports: Some(2),
            params: pair_params(),
            one_of: vec![],
            doc: "two atoms on a bidirectional waveguide",
        },
        KindSchema {
            kind: "coprop_pair",
            ports: Some(2),
            params: pair_params(),
            one_of: vec![],
            doc: "two atoms coupled through two co-propagating modes",
        },
    ]
}

fn optomech_params() -> Vec<ParamSchema> {
    vec![
        param!("kappa", Real, req, "cavity decay rate"),
        param!("gamma_m", Real, req, "mechanical bath coupling Γ"),
        param!("nbar", Real, "0", "thermal phonon number"),
        param!("delta_c", Real, "0", "cavity detuning"),
        param!("delta_m", Real, "0", "mechanical detuning"),
        param!("g", Real, req, "optomechanical coupling"),
        param!("trunc", Int, "8", "cavity truncation"),
        param!("trunc_m", Int, "8", "mechanical truncation"),
    ]
}

fn atom_cavity_params(with_gamma: bool) -> Vec<ParamSchema> {
    let mut p = vec![
        param!("kappa", Real, req, "cavity decay rate"),
        param!("delta_c", Real, "0", "cavity detuning"),
        param!("omega", Real, "0", "atomic frequency Ω"),
        param!("g", Real, req, "atom-field coupling"),
        param!("trunc", Int, "8", "cavity truncation"),
    ];
    if with_gamma {
        p.push(param!("gamma", Real, opt, "atomic decay into a separate port"));
    }
    p
}

fn pair_params() -> Vec<ParamSchema> {
    vec![
        param!("gamma1", Real, req, "decay rate of atom 1"),
        param!("gamma2", Real, req, "decay rate of atom 2"),
        param!("delta1", Real, "0", "detuning of atom 1"),
        param!("delta2", Real, "0", "detuning of atom 2"),
        param!("phi", Real, "0", "propagation phase"),
    ]
}

pub fn kind_schema(kind: &str) -> Option<KindSchema> {
    schema().into_iter().find(|k| k.kind == kind)
}

/// Builds the triple for a catalog request.
pub fn instantiate(spec: &ComponentSpec) -> Result<SlhTriple> {
    let schema = kind_schema(&spec.kind).ok_or_else(|| Error::Validation(format!("unknown kind '{}'", spec.kind)))?;
    let p = Params::new(spec, &schema)?;
    let name = spec.name.as_str();
    let g = match spec.kind.as_str() {
        "phase_shifter" => phase_shifter(p.real("phi")?),
        "beamsplitter" => beamsplitter(&p)?,
        "coherent_source" => coherent_source(&p)?,
        "one_sided_cavity" => {
            one_sided_cavity(name, p.rate_alias(&["gamma", "kappa"])?, p.real_or("delta", 0.0)?, p.trunc("trunc", DEFAULT_TRUNC)?)?
        }
        "kerr_cavity" => {
            let (a, _, n) = ladder(name, p.trunc("trunc", DEFAULT_TRUNC)?)?;
            let kappa = p.rate_alias(&["gamma", "kappa"])?;
            let h = &n.scale_re(p.real_or("delta", 0.0)?) + &(&n * &n).scale_re(p.real("chi")?);
            SlhTriple::new(unit_s(1), vec![a.scale_re(kappa.sqrt())], h)?
        }
        "fabry_perot" => {
            let (a, _, n) = ladder(name, p.trunc("trunc", DEFAULT_TRUNC)?)?;
            let k1 = p.rate("kappa1")?;
            let k2 = p.rate("kappa2")?;
            let e1 = C64::from_polar(k1.sqrt(), p.real_or("phase1", 0.0)?);
            let e2 = C64::from_polar(k2.sqrt(), p.real_or("phase2", 0.0)?);
            SlhTriple::new(unit_s(2), vec![a.scale(e1), a.scale(e2)], n.scale_re(p.real_or("delta", 0.0)?))?
        }
        "cross_kerr_cavities" => {
            let d = p.trunc("trunc", DEFAULT_TRUNC)?;
            let (a1, _, n1) = ladder(&sub(name, "a1"), d)?;
            let (a2, _, n2) = ladder(&sub(name, "a2"), d)?;
            let h = &(&n1.scale_re(p.real_or("delta1", 0.0)?) + &n2.scale_re(p.real_or("delta2", 0.0)?))
                + &(&n1 * &n2).scale_re(p.real("chi")?);
            SlhTriple::new(unit_s(2), vec![a1.scale_re(p.rate("kappa1")?.sqrt()), a2.scale_re(p.rate("kappa2")?.sqrt())], h)?
        }
        "degenerate_opo" => {
            let (a, ad, n) = ladder(name, p.trunc("trunc", DEFAULT_TRUNC)?)?;
            let h = &squeezing_h(&ad, p.complex("e")?) + &n.scale_re(p.real_or("delta", 0.0)?);
            SlhTriple::new(unit_s(1), vec![a.scale_re(p.rate("kappa")?.sqrt())], h)?
        }
        "squeezed_source" => {
            let (a, ad, _) = ladder(name, p.trunc("trunc", DEFAULT_TRUNC)?)?;
            SlhTriple::new(unit_s(1), vec![a.scale_re(p.rate("gamma")?.sqrt())], squeezing_h(&ad, p.complex("e")?))?
        }
        "two_mode_squeezer" => two_mode_squeezer(name, &p)?,
        "optomechanics" | "optomechanics_linearized" => optomechanics(name, &p, spec.kind == "optomechanics_linearized")?,
        "tla_waveguide" => tla_waveguide(name, p.rate("kappa_g")?, p.rate_or("kappa_perp", 0.0)?, p.real_or("omega", 0.0)?)?,
        "trapped_tla" => trapped_tla(name, &p)?,
        "rabi" => {
            let d = p.trunc("trunc", DEFAULT_TRUNC)?;
            let (a, ad, n) = ladder(&sub(name, "a"), d)?;
            let (sm, sp, sz) = qubit(&sub(name, "q"))?;
            let sx = &sm + &sp;
            let h = &(&n.scale_re(p.real_or("delta_c", 0.0)?) + &sz.scale_re(0.5 * p.real_or("omega", 0.0)?))
                + &(&sx * &(&a + &ad)).scale_re(p.real("g")?);
            SlhTriple::new(unit_s(1), vec![a.scale_re(p.rate("kappa")?.sqrt())], h)?
        }
        "jaynes_cummings" => {
            let gamma = if p.has("gamma") { Some(p.rate("gamma")?) } else { None };
            jaynes_cummings(
                name,
                p.rate("kappa")?,
                p.real_or("delta_c", 0.0)?,
                p.real_or("omega", 0.0)?,
                p.real("g")?,
                gamma,
                p.trunc("trunc", DEFAULT_TRUNC)?,
            )?
        }
        "tavis_cummings" => tavis_cummings(name, &p)?,
        "circulator_ideal" => circulator_ideal(p.int_or("ports", 3)?)?,
        "circulator_nonideal" => circulator_nonideal(
            p.complex("r")?,
            p.complex("b")?,
            p.complex("t")?,
            if p.has("c") { Some(p.complex("c")?) } else { None },
        )?,
        "circulator_finite_bw" => {
            let gamma = p.rate("gamma")?;
            circulator_finite_bw(
                name,
                gamma,
                p.real_or("delta", 0.0)?,
                p.real_or("t", gamma / 2.0)?,
                p.real_or("phi", -PI / 2.0)?,
                p.trunc("trunc", 4)?,
            )?
        }
        "coherent_source_cavity" => {
            let alpha = p.complex("alpha")?;
            let default = (alpha.norm_sqr() + 6.0 * alpha.norm() + 6.0).ceil() as usize;
            let d = p.trunc("trunc", default.max(DEFAULT_TRUNC))?;
            let (a, _, _) = ladder(name, d)?;
            let env = p.envelope("envelope")?;
            let l = Operator::timed(env.lambda_coefficient(), &a);
            SlhTriple::new(unit_s(1), vec![l], Operator::zero(a.space()))?.with_initial(name, LocalState::Coherent(alpha))
        }
        "fock_source" => {
            let n = p.int("n")?;
            let d = p.int_or("trunc", (n + 1).max(2))?;
            if d < n + 1 || d < 2 {
                return Err(Error::Validation(format!("fock_source: violated trunc >= n + 1 (trunc = {d}, n = {n})")));
            }
            let (a, _, _) = ladder(name, d)?;
            let env = p.envelope("envelope")?;
            let l = Operator::timed(env.lambda_coefficient(), &a);
            SlhTriple::new(unit_s(1), vec![l], Operator::zero(a.space()))?.with_initial(name, LocalState::Fock(n))
        }
        "loss_beamsplitter" => {
            let eta = p.real("eta")?;
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Validation(format!("loss_beamsplitter: violated 0 <= eta <= 1 (eta = {eta})")));
            }
            let (t, r) = ((1.0 - eta).sqrt(), eta.sqrt());
            SlhTriple::static_scattering(&[vec![re(t), re(-r)], vec![re(r), re(t)]])?
        }
        "mode_loss" => {
            let mode = p.ident("mode")?;
            let (a, _, _) = ladder(&mode, p.trunc("trunc", DEFAULT_TRUNC)?)?;
            SlhTriple::new(unit_s(1), vec![a.scale_re(p.rate("rate")?.sqrt())], Operator::zero(a.space()))?
        }
        "dispersion_cavity" => dispersion_cavity(name, &p)?,
        "cavity_chain" => {
            build_cavity_chain(name, &p.real_list("betas")?, &p.real_list("detunings")?, p.trunc("trunc", DEFAULT_TRUNC)?)?
        }
        "counterprop_pair" | "coprop_pair" => {
            let args = (
                p.rate("gamma1")?,
                p.rate("gamma2")?,
                p.real_or("delta1", 0.0)?,
                p.real_or("delta2", 0.0)?,
                p.real_or("phi", 0.0)?,
            );
            if spec.kind == "counterprop_pair" {
                build_counterpropagating_pair(name, args.0, args.1, args.2, args.3, args.4)?
            } else {
                build_copropagating_pair(name, args.0, args.1, args.2, args.3, args.4)?
            }
        }
        other => return Err(Error::Validation(format!("unknown kind '{other}'"))),
    };
    Ok(finish(g, spec))
}

fn squeezing_h(ad: &Operator, e: C64) -> Operator {
    // (i/2)(E a†² − E* a²)
    let x = (ad * ad).scale(e);
    (&x - &x.adjoint()).scale(c(0.0, 0.5))
}

pub fn phase_shifter(phi: f64) -> SlhTriple {
    SlhTriple::static_scattering(&[vec![C64::from_polar(1.0, phi)]]).expect("phase shifter")
}

fn beamsplitter(p: &Params) -> Result<SlhTriple> {
    let s = if p.has("eta") {
        let eta = p.real("eta")?;
        if eta.abs() > 1.0 {
            return Err(Error::Validation(format!("beamsplitter: violated |eta| <= 1 (eta = {eta})")));
        }
        let t = (1.0 - eta * eta).sqrt();
        vec![vec![re(t), re(-eta)], vec![re(eta), re(t)]]
    } else if p.has("theta") {
        let th = p.real("theta")?;
        vec![vec![re(th.cos()), re(-th.sin())], vec![re(th.sin()), re(th.cos())]]
    } else {
        let s = vec![vec![p.complex("r11")?, p.complex("t12")?], vec![p.complex("t21")?, p.complex("r22")?]];
        check_unitary(&s, "beamsplitter")?;
        s
    };
    SlhTriple::static_scattering(&s)
}

fn coherent_source(p: &Params) -> Result<SlhTriple> {
    let alpha = p.complex("alpha")?;
    let sp = LabeledSpace::scalar();
    let l = match p.envelope_opt("envelope")? {
        Some(env) => Operator::timed(env.xi_coefficient(alpha), &Operator::identity(&sp)),
        None => Operator::scalar(alpha),
    };
    SlhTriple::new(unit_s(1), vec![l], scalar_zero())
}

/// `(1, α, 0)` with a constant amplitude.
pub fn coherent_drive(alpha: C64) -> SlhTriple {
    SlhTriple::new(unit_s(1), vec![Operator::scalar(alpha)], scalar_zero()).expect("coherent drive")
}

pub fn one_sided_cavity(label: &str, gamma: f64, delta: f64, trunc: usize) -> Result<SlhTriple> {
    if gamma < 0.0 {
        return Err(Error::Validation(format!("one_sided_cavity: violated gamma >= 0 (gamma = {gamma})")));
    }
    let (a, _, n) = ladder(label, trunc)?;
    SlhTriple::new(unit_s(1), vec![a.scale_re(gamma.sqrt())], n.scale_re(delta))
}

fn two_mode_squeezer(name: &str, p: &Params) -> Result<SlhTriple> {
    let d = p.trunc("trunc", DEFAULT_TRUNC)?;
    let (a1, ad1, _) = ladder(&sub(name, "a1"), d)?;
    let (a2, ad2, _) = ladder(&sub(name, "a2"), d)?;
    let eps = p.complex("epsilon")?;
    let dp = p.real_or("delta_p", 0.0)?;
    let pair = (&ad1 * &ad2).scale(c(0.0, 0.5));
    let h = if dp == 0.0 {
        let x = pair.scale(eps);
        &x + &x.adjoint()
    } else {
        let coeff = crate::hilbert::Coefficient::new(format!("{eps}*exp(-i*{dp:?}*t)"), move |t| eps * C64::from_polar(1.0, -dp * t));
        let x = Operator::timed(coeff, &pair);
        &x + &x.adjoint()
    };
    SlhTriple::new(unit_s(2), vec![a1.scale_re(p.rate("kappa1")?.sqrt()), a2.scale_re(p.rate("kappa2")?.sqrt())], h)
}

fn optomechanics(name: &str, p: &Params, linearized: bool) -> Result<SlhTriple> {
    let (a, ad, n) = ladder(&sub(name, "a"), p.trunc("trunc", DEFAULT_TRUNC)?)?;
    let (b, bd, nb) = ladder(&sub(name, "b"), p.trunc("trunc_m", DEFAULT_TRUNC)?)?;
    let gm = p.rate("gamma_m")?;
    let nbar = p.rate_or("nbar", 0.0)?;
    let g = p.real("g")?;
    let x_b = &b + &bd;
    let coupling = if linearized { (&(&a + &ad) * &x_b).scale_re(g) } else { (&n * &x_b).scale_re(-g) };
    let h = &(&n.scale_re(p.real_or("delta_c", 0.0)?) + &nb.scale_re(p.real_or("delta_m", 0.0)?)) + &coupling;
    SlhTriple::new(
        unit_s(3),
        vec![a.scale_re(p.rate("kappa")?.sqrt()), b.scale_re((gm * (nbar + 1.0)).sqrt()), bd.scale_re((gm * nbar).sqrt())],
        h,
    )
}

pub fn tla_waveguide(label: &str, kappa_g: f64, kappa_perp: f64, omega: f64) -> Result<SlhTriple> {
    let (sm, _, sz) = qubit(label)?;
    SlhTriple::new(unit_s(2), vec![sm.scale_re(kappa_g.sqrt()), sm.scale_re(kappa_perp.sqrt())], sz.scale_re(0.5 * omega))
}

fn trapped_tla(name: &str, p: &Params) -> Result<SlhTriple> {
    let d = p.trunc("trunc", DEFAULT_TRUNC)?;
    let (b, bd, _) = ladder(&sub(name, "m"), d)?;
    let (sm, _, sz) = qubit(&sub(name, "q"))?;
    let mass = p.real("mass")?;
    let nu = p.real("nu")?;
    if !(mass > 0.0) || !(nu > 0.0) {
        return Err(Error::Validation("trapped_tla: violated mass > 0 and nu > 0".into()));
    }
    let k0 = p.real("k0")?;
    // [x, p] = i with x = (b + b†)/√(2mν), p = i√(mν/2)(b† − b)
    let x = (&b + &bd).scale_re(1.0 / (2.0 * mass * nu).sqrt());
    let mom = (&bd - &b).scale(c(0.0, (mass * nu / 2.0).sqrt()));
    let h = &(&sz.scale_re(0.5 * p.real_or("omega", 0.0)?) + &(&mom * &mom).scale_re(0.5 / mass))
        + &(&x * &x).scale_re(0.5 * mass * nu * nu);
    let eig = nalgebra::SymmetricEigen::new(x.to_dense());
    let phase = |sign: f64| -> Result<Operator> {
        let v = &eig.eigenvectors;
        let diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::from_polar(1.0, sign * k0 * l)));
        Operator::from_dense(x.space().clone(), &(v * diag * v.adjoint()))
    };
    let l = vec![
        (&sm * &phase(1.0)?).scale_re(p.rate("kappa_r")?.sqrt()),
        (&sm * &phase(-1.0)?).scale_re(p.rate("kappa_l")?.sqrt()),
        sm.scale_re(p.rate_or("kappa_perp", 0.0)?.sqrt()),
    ];
    SlhTriple::new(unit_s(3), l, h)
}

pub fn jaynes_cummings(
    name: &str,
    kappa: f64,
    delta_c: f64,
    omega: f64,
    g: f64,
    gamma: Option<f64>,
    trunc: usize,
) -> Result<SlhTriple> {
    let (a, ad, n) = ladder(&sub(name, "a"), trunc)?;
    let (sm, sp, sz) = qubit(&sub(name, "q"))?;
    let h = &(&n.scale_re(delta_c) + &sz.scale_re(0.5 * omega)) + &(&(&sm * &ad) + &(&sp * &a)).scale_re(g);
    let mut l = vec![a.scale_re(kappa.sqrt())];
    if let Some(gamma) = gamma {
        l.push(sm.scale_re(gamma.sqrt()));
    }
    let n_ports = l.len();
    SlhTriple::new(unit_s(n_ports), l, h)
}

fn tavis_cummings(name: &str, p: &Params) -> Result<SlhTriple> {
    let n_atoms = p.int("n_atoms")?;
    if n_atoms == 0 {
        return Err(Error::Validation("tavis_cummings: violated n_atoms >= 1".into()));
    }
    let (a, ad, n) = ladder(&sub(name, "a"), p.trunc("trunc", DEFAULT_TRUNC)?)?;
    let spin = Factor::new(sub(name, "j"), n_atoms + 1, FactorKind::Spin);
    let jm = spin_lower(&spin)?;
    let jp = jm.adjoint();
    // Σσz = 2Ĵz, so N = 1 reproduces the Jaynes–Cummings model.
    let jz = spin_z(&spin)?.scale_re(2.0);
    let h = &(&n.scale_re(p.real_or("delta_c", 0.0)?) + &jz.scale_re(0.5 * p.real_or("omega", 0.0)?))
        + &(&(&jm * &ad) + &(&jp * &a)).scale_re(p.real("g")?);
    SlhTriple::new(unit_s(1), vec![a.scale_re(p.rate("kappa")?.sqrt())], h)
}

pub fn circulator_ideal(n: usize) -> Result<SlhTriple> {
    if n < 2 {
        return Err(Error::Validation(format!("circulator_ideal: violated ports >= 2 (ports = {n})")));
    }
    let s: Vec<Vec<C64>> =
        (0..n).map(|j| (0..n).map(|k| if k == (j + n - 1) % n { re(1.0) } else { re(0.0) }).collect()).collect();
    SlhTriple::static_scattering(&s)
}

pub fn circulator_nonideal(r: C64, b: C64, t: C64, c4: Option<C64>) -> Result<SlhTriple> {
    let s = match c4 {
        None => {
            let norm = t.norm_sqr() + r.norm_sqr() + b.norm_sqr();
            if (norm - 1.0).abs() > TOL_OP {
                return Err(Error::Validation(format!(
                    "circulator_nonideal: violated |t|^2 + |r|^2 + |b|^2 = 1 (got {norm:.12})"
                )));
            }
            let cross = r * t.conj() + t * b.conj() + b * r.conj();
            if cross.norm() > TOL_OP {
                return Err(Error::Validation(format!(
                    "circulator_nonideal: violated r t* + t b* + b r* = 0 (got {cross:.3e})"
                )));
            }
            vec![vec![r, b, t], vec![t, r, b], vec![b, t, r]]
        }
        Some(c4) => {
            let s = vec![vec![r, b, c4, t], vec![t, r, b, c4], vec![c4, t, r, b], vec![b, c4, t, r]];
            check_unitary(&s, "circulator_nonideal")?;
            s
        }
    };
    SlhTriple::static_scattering(&s)
}

pub fn circulator_finite_bw(name: &str, gamma: f64, delta: f64, t: f64, phi: f64, trunc: usize) -> Result<SlhTriple> {
    let (b1, _, n1) = ladder(&sub(name, "b1"), trunc)?;
    let (b2, _, n2) = ladder(&sub(name, "b2"), trunc)?;
    let (b3, _, n3) = ladder(&sub(name, "b3"), trunc)?;
    // ring hopping b1 → b2 → b3 → b1
    let hop = &(&(&b1.adjoint() * &b3) + &(&b2.adjoint() * &b1).scale(C64::from_polar(1.0, phi))) + &(&b3.adjoint() * &b2);
    let h = &(&(&n1 + &n2) + &n3).scale_re(delta) + &(&hop + &hop.adjoint()).scale_re(t);
    let k = gamma.sqrt();
    SlhTriple::new(unit_s(3), vec![b1.scale_re(k), b2.scale_re(k), b3.scale_re(k)], h)
}

fn dispersion_cavity(name: &str, p: &Params) -> Result<SlhTriple> {
    let (gamma_d, omega_d) = if p.has("delta_d") {
        let dd = p.rate("delta_d")?;
        (12f64.sqrt() * dd, p.real("omega_c")? - dd)
    } else {
        (p.rate("gamma_d")?, p.real("omega_d")?)
    };
    let (a, _, n) = ladder(name, p.trunc("trunc", DEFAULT_TRUNC)?)?;
    let s = vec![vec![Operator::scalar(C64::from_polar(1.0, p.real_or("phi", 0.0)?))]];
    SlhTriple::new(s, vec![a.scale_re(gamma_d.sqrt())], n.scale_re(omega_d))
}

/// N cascaded cavities in closed form: `L = Σ√β_k a_k`,
/// `H = Σ ξ_k a_k†a_k + (1/2i) Σ_{j>k} √(β_jβ_k)(a_j†a_k − a_k†a_j)`.
pub fn build_cavity_chain(name: &str, betas: &[f64], detunings: &[f64], trunc: usize) -> Result<SlhTriple> {
    if betas.is_empty() {
        return Err(Error::Validation("cavity_chain: violated N >= 1".into()));
    }
    if betas.len() != detunings.len() {
        return Err(Error::Validation(format!(
            "cavity_chain: {} rates but {} detunings",
            betas.len(),
            detunings.len()
        )));
    }
    if let Some(b) = betas.iter().find(|b| **b < 0.0) {
        return Err(Error::Validation(format!("cavity_chain: violated beta >= 0 (beta = {b})")));
    }
    let modes = (0..betas.len())
        .map(|k| ladder(&sub(name, &format!("a{}", k + 1)), trunc))
        .collect::<Result<Vec<_>>>()?;
    let mut l = Operator::scalar(re(0.0));
    let mut h = Operator::scalar(re(0.0));
    for (k, (a, _, n)) in modes.iter().enumerate() {
        l = &l + &a.scale_re(betas[k].sqrt());
        h = &h + &n.scale_re(detunings[k]);
    }
    for j in 1..modes.len() {
        for k in 0..j {
            let x = &modes[j].1 * &modes[k].0;
            h = &h + &(&x - &x.adjoint()).scale(c(0.0, -0.5 * (betas[j] * betas[k]).sqrt()));
        }
    }
    SlhTriple::new(unit_s(1), vec![l], h)
}

fn pair_common(name: &str, g1: f64, g2: f64, d1: f64, d2: f64, phi: f64) -> Result<(PairOps, Operator)> {
    let (s1, p1, z1) = qubit(&sub(name, "q1"))?;
    let (s2, p2, z2) = qubit(&sub(name, "q2"))?;
    let h0 = &z2.scale_re(-d2 / 2.0) + &z1.scale_re(-d1 / 2.0);
    let ops = PairOps { s1, p1, s2, p2, e: C64::from_polar(1.0, phi), r1: (g1 / 2.0).sqrt(), r2: (g2 / 2.0).sqrt() };
    Ok((ops, h0))
}

struct PairOps {
    s1: Operator,
    p1: Operator,
    s2: Operator,
    p2: Operator,
    e: C64,
    r1: f64,
    r2: f64,
}

/// Two atoms on a bidirectional waveguide separated by a phase `φ`.
pub fn build_counterpropagating_pair(name: &str, g1: f64, g2: f64, d1: f64, d2: f64, phi: f64) -> Result<SlhTriple> {
    let (o, h0) = pair_common(name, g1, g2, d1, d2, phi)?;
    let l1 = &o.s2.scale_re(o.r2) + &o.s1.scale(o.e * o.r1);
    let l2 = &o.s1.scale_re(o.r1) + &o.s2.scale(o.e * o.r2);
    let exch = &(&o.s1 * &o.p2) + &(&o.p1 * &o.s2);
    let h = &h0 + &exch.scale_re((g1 * g2).sqrt() / 2.0 * phi.sin());
    let s = vec![vec![Operator::scalar(o.e), Operator::scalar(re(0.0))], vec![Operator::scalar(re(0.0)), Operator::scalar(o.e)]];
    SlhTriple::new(s, vec![l1, l2], h)
}

/// Two atoms coupled through two co-propagating modes.
pub fn build_copropagating_pair(name: &str, g1: f64, g2: f64, d1: f64, d2: f64, phi: f64) -> Result<SlhTriple> {
    let (o, h0) = pair_common(name, g1, g2, d1, d2, phi)?;
    let l = &o.s2.scale_re(o.r2) + &o.s1.scale(o.e * o.r1);
    let sym = &(&o.s1 * &o.p2) + &(&o.p1 * &o.s2);
    let anti = &(&o.s1 * &o.p2) - &(&o.p1 * &o.s2);
    let k = (g1 * g2).sqrt() / 2.0;
    let h = &(&h0 + &sym.scale_re(k * phi.sin())) + &anti.scale(c(0.0, -k * phi.cos()));
    let s = vec![vec![Operator::scalar(o.e), Operator::scalar(re(0.0))], vec![Operator::scalar(re(0.0)), Operator::scalar(o.e)]];
    SlhTriple::new(s, vec![l.clone(), l], h)
}

use super::{Params, SystemSpec};
use crate::{Error, Result};

pub const SYSTEM_NAMES: [&str; 7] = ["lorenz3", "vanderpol", "chen", "rossler", "lorenz14", "duffing", "limit_cycle"];

/// Options for systems whose published form is ambiguous.
#[derive(Clone, Copy, Debug)]
pub struct CatalogOptions {
    /// Use `dz/dt = xy - βz` for lorenz3. When false the third equation is
    /// `dz/dt = -xy - βz`, which escapes to infinity from generic starting points.
    pub canonical_lorenz: bool,
}

impl Default for CatalogOptions {
    fn default() -> Self {
        Self { canonical_lorenz: true }
    }
}

pub fn catalog(name: &str) -> Result<SystemSpec> {
    catalog_with(name, CatalogOptions::default())
}

pub fn catalog_with(name: &str, options: CatalogOptions) -> Result<SystemSpec> {
    let spec = match name {
        "lorenz3" => lorenz3(options.canonical_lorenz),
        "vanderpol" => vanderpol(),
        "chen" => chen(),
        "rossler" => rossler(),
        "lorenz14" => lorenz14(),
        "duffing" => duffing(),
        "limit_cycle" => limit_cycle(),
        _ => return Err(Error::UnknownSystem { name: name.to_string(), valid: SYSTEM_NAMES.join(", ") }),
    };
    Ok(spec)
}

fn lorenz3(canonical: bool) -> SystemSpec {
    let params = Params::new().with("sigma", 10.0).with("rho", 28.0).with("beta", 8.0 / 3.0);
    let sign = if canonical { 1.0 } else { -1.0 };
    SystemSpec::new("lorenz3", 3, params, vec![1.0, 1.0, 1.0], move |x, p, out| {
        let s = SystemSpec::require(p, "lorenz3", "sigma")?;
        let r = SystemSpec::require(p, "lorenz3", "rho")?;
        let b = SystemSpec::require(p, "lorenz3", "beta")?;
        out[0] = s * (x[1] - x[0]);
        out[1] = x[0] * (r - x[2]) - x[1];
        out[2] = sign * x[0] * x[1] - b * x[2];
        Ok(())
    })
}

fn vanderpol() -> SystemSpec {
    let params = Params::new().with("mu", 1.0);
    SystemSpec::new("vanderpol", 2, params, vec![2.0, 0.0], |x, p, out| {
        let mu = SystemSpec::require(p, "vanderpol", "mu")?;
        out[0] = mu * (x[0] - x[0].powi(3) / 3.0 - x[1]);
        out[1] = x[0] / mu;
        Ok(())
    })
}

fn chen() -> SystemSpec {
    let params = Params::new().with("alpha", 5.0).with("beta", -10.0).with("delta", -0.38);
    SystemSpec::new("chen", 3, params, vec![1.0, 1.0, 1.0], |x, p, out| {
        let a = SystemSpec::require(p, "chen", "alpha")?;
        let b = SystemSpec::require(p, "chen", "beta")?;
        let d = SystemSpec::require(p, "chen", "delta")?;
        out[0] = a * x[0] - x[1] * x[2];
        out[1] = b * x[1] + x[0] * x[2];
        out[2] = d * x[2] + x[0] * x[1] / 3.0;
        Ok(())
    })
}

fn rossler() -> SystemSpec {
    let params = Params::new().with("a", 0.2).with("b", 0.2).with("c", 5.7);
    SystemSpec::new("rossler", 3, params, vec![1.0, 1.0, 1.0], |x, p, out| {
        let a = SystemSpec::require(p, "rossler", "a")?;
        let b = SystemSpec::require(p, "rossler", "b")?;
        let c = SystemSpec::require(p, "rossler", "c")?;
        out[0] = -x[1] - x[2];
        out[1] = x[0] + a * x[1];
        out[2] = b + x[2] * (x[0] - c);
        Ok(())
    })
}

fn duffing() -> SystemSpec {
    let params = Params::new().with("delta", 0.1).with("alpha", -1.0).with("beta", 1.0);
    SystemSpec::new("duffing", 2, params, vec![1.0, 0.5], |x, p, out| {
        let d = SystemSpec::require(p, "duffing", "delta")?;
        let a = SystemSpec::require(p, "duffing", "alpha")?;
        let b = SystemSpec::require(p, "duffing", "beta")?;
        out[0] = x[1];
        out[1] = -d * x[1] - a * x[0] - b * x[0].powi(3);
        Ok(())
    })
}

fn limit_cycle() -> SystemSpec {
    SystemSpec::new("limit_cycle", 2, Params::new(), vec![0.5, 0.0], |x, _, out| {
        let g = 1.0 - x[0] * x[0] - x[1] * x[1];
        out[0] = -x[1] + x[0] * g;
        out[1] = x[0] + x[1] * g;
        Ok(())
    })
}

/// Fourteen-mode truncation of two-dimensional Rayleigh-Bénard convection.
///
/// State order: ψ11 ψ13 ψ22 ψ31 ψ33 ψ24 θ11 θ13 θ22 θ31 θ33 θ24 θ02 θ04.
/// Parameters: Prandtl number `sigma`, reduced Rayleigh number `r` (with `R = 6.75 r`)
/// and aspect parameter `a`.
///
/// Several advection coefficients of the θ equations are adjusted so that the quadratic
/// terms conserve the weighted temperature variance, as the underlying Galerkin
/// truncation requires; without this the system blows up from every starting point.
fn lorenz14() -> SystemSpec {
    let params = Params::new().with("sigma", 10.0).with("r", 45.92).with("a", std::f64::consts::FRAC_1_SQRT_2);
    SystemSpec::new("lorenz14", 14, params, vec![0.1; 14], |v, p, d| {
        let sigma = SystemSpec::require(p, "lorenz14", "sigma")?;
        let r = SystemSpec::require(p, "lorenz14", "r")?;
        let a = SystemSpec::require(p, "lorenz14", "a")?;
        let big_r = 6.75 * r;
        let [p11, p13, p22, p31, p33, p24, t11, t13, t22, t31, t33, t24, t02, t04] =
            <[f64; 14]>::try_from(v).expect("length checked by eval");

        d[0] = -a * (7.0 / 3.0 * p13 * p22 + 17.0 / 6.0 * p13 * p24 + 1.0 / 3.0 * p31 * p22 + 4.5 * p33 * p24)
            - 1.5 * sigma * p11
            + sigma * a * 2.0 / 3.0 * t11;
        d[1] = a
            * (-9.0 / 19.0 * p11 * p22 + 33.0 / 38.0 * p11 * p24 + 2.0 / 19.0 * p31 * p22 - 125.0 / 38.0 * p31 * p24)
            - 9.5 * sigma * p13
            + sigma * a * 2.0 / 19.0 * t13;
        d[2] = a * (4.0 / 3.0 * p11 * p13 - 2.0 / 3.0 * p11 * p31 - 4.0 / 3.0 * p13 * p31) - 6.0 * sigma * p22
            + sigma * a / 3.0 * t22;
        d[3] = a * (9.0 / 11.0 * p11 * p22 + 14.0 / 11.0 * p13 * p22 + 85.0 / 22.0 * p13 * p24) - 5.5 * sigma * p31
            + sigma * a * 6.0 / 11.0 * t31;
        d[4] = a * (11.0 / 6.0 * p11 * p24) - 13.5 * sigma * p33 + sigma * a * 2.0 / 9.0 * t33;
        d[5] = a * (-2.0 / 9.0 * p11 * p13 - p11 * p33 + 5.0 / 9.0 * p13 * p31) - 18.0 * sigma * p24
            + sigma * a / 9.0 * t24;

        d[6] = a
            * (p11 * t02 + p13 * t22 - 0.5 * p13 * t24 - p13 * t02
                + 2.0 * p13 * t04
                + p22 * t13
                + p22 * t31
                + p31 * t22
                + 1.5 * p33 * t24
                - 0.5 * p24 * t13
                + 1.5 * p24 * t33)
            + big_r * a * p11
            - 1.5 * t11;
        d[7] = a
            * (-p11 * t22 - 0.5 * p11 * t24 - p11 * t02 + 2.0 * p11 * t04 - p22 * t11 - 2.0 * p22 * t31
                + 2.5 * p31 * t24
                + 0.5 * p24 * t11
                + 2.5 * p24 * t31)
            + big_r * a * p13
            - 9.5 * t13;
        d[8] = a
            * (p11 * t13 - p11 * t31 - p13 * t11 + 2.0 * p13 * t31 + 4.0 * p22 * t04 - p31 * t11 + 2.0 * p24 * t02)
            + 2.0 * big_r * a * p22
            - 6.0 * t22;
        d[9] = a
            * (p11 * t22 - 2.0 * p13 * t22 + 2.5 * p13 * t24 - p22 * t11 + 2.0 * p22 * t13 + 3.0 * p31 * t02
                - 3.0 * p33 * t02
                + 8.0 * p33 * t04
                - 2.5 * p24 * t13)
            + 3.0 * big_r * a * p31
            - 5.5 * t31;
        d[10] = a * (1.5 * p11 * t24 - 3.0 * p31 * t02 + 8.0 * p31 * t04 - 1.5 * p24 * t11) + 3.0 * big_r * a * p33
            - 13.5 * t33;
        d[11] = a
            * (0.5 * p11 * t13 - 1.5 * p11 * t33 + 0.5 * p13 * t11
                - 2.5 * p13 * t31
                - 2.0 * p22 * t02
                - 2.5 * p31 * t13
                - 1.5 * p33 * t11)
            + 2.0 * big_r * a * p24
            - 18.0 * t24;
        d[12] = a
            * (-0.5 * p11 * t11 + 0.5 * p11 * t13 + 0.5 * p13 * t11 + p22 * t24 - 1.5 * p31 * t31
                + 1.5 * p31 * t33
                + 1.5 * p33 * t31
                + p24 * t24)
            - 4.0 * t02;
        d[13] = -a * (p11 * t13 + p13 * t11 + 2.0 * p22 * t22 + 4.0 * p31 * t33 + 4.0 * p33 * t31) - 16.0 * t04;
        Ok(())
    })
}

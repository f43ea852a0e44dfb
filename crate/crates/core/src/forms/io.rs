//! Form files: a JSON manifest plus one field file per term.
//!
//! The manifest lists the degree, coefficient shape and, for each term, its
//! basis wedge and the name of the binary field file holding the coefficient.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BasisWedge, Form};
use crate::domain::io as field_io;
use crate::error::{Error, Result};
use crate::value::Shape;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    degree: usize,
    rows: usize,
    cols: usize,
    terms: Vec<TermEntry>,
}

#[derive(Serialize, Deserialize)]
struct TermEntry {
    discrete: Vec<usize>,
    continuous: Vec<usize>,
    file: String,
}

const FORMAT: &str = "curvkit-form-1";

/// Writes `manifest.json` and `term<k>.cvkf` files into `dir`.
pub fn save_form(form: &Form, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut terms = Vec::new();
    for (k, (b, f)) in form.terms().enumerate() {
        let file = format!("term{k}.cvkf");
        field_io::save(f, &dir.join(&file))?;
        terms.push(TermEntry {
            discrete: b.discrete_indices(),
            continuous: b.continuous_indices(),
            file,
        });
    }
    let manifest = Manifest {
        format: FORMAT.into(),
        degree: form.degree(),
        rows: form.shape().rows,
        cols: form.shape().cols,
        terms,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Reads a form written by [`save_form`]. Coefficients come back as grids on
/// the domain recorded in the first term file.
pub fn load_form(dir: &Path) -> Result<Form> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if manifest.format != FORMAT {
        return Err(Error::Parse(format!(
            "unknown form format {}",
            manifest.format
        )));
    }
    let shape = Shape::new(manifest.rows, manifest.cols);
    let mut fields = Vec::new();
    for t in &manifest.terms {
        let f = field_io::load(&dir.join(&t.file))?;
        fields.push((BasisWedge::new(&t.discrete, &t.continuous)?, f));
    }
    let Some(domain) = fields.first().map(|(_, f)| f.domain().clone()) else {
        return Err(Error::Parse(
            "an empty form carries no domain and cannot be loaded".into(),
        ));
    };
    let mut terms = Vec::new();
    for (b, f) in fields {
        if **f.domain() != *domain {
            return Err(Error::DomainMismatch);
        }
        let samples = f.grid_samples().expect("loaded fields are grids").to_vec();
        terms.push((
            b,
            crate::domain::Field::grid(&domain, f.shape(), f.region().clone(), samples)?,
        ));
    }
    Form::from_terms(&domain, manifest.degree, shape, terms)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{make_domain, Field};

    #[test]
    fn roundtrip_through_a_directory() {
        let d = Arc::new(make_domain(2, 1, &[(0, 3), (0, 2)], &[(0.0, 1.0)], &[0.5]).unwrap());
        let n = Field::lattice_coordinate(&d, 0).unwrap();
        let x = Field::continuous_coordinate(&d, 0).unwrap();
        let f = n.pointwise_mul(&x).unwrap().exp();
        let form = Form::function(&f).d().unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_form(&form, dir.path()).unwrap();
        let back = load_form(dir.path()).unwrap();
        assert_eq!(back.degree(), 1);
        assert_eq!(back.len(), form.len());
        let diff = back.sub(&form.materialize().unwrap()).unwrap();
        assert_eq!(diff.max_norm().unwrap(), 0.0);
    }
}

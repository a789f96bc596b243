//! Question text: one phrase class per primitive and one template per typed
//! graph label.

use crate::error::{Error, Result};
use crate::formal::PrimitiveId;
use crate::sample::NodeParams;
use crate::scheme::Scheme;

/// `2nd`, `3rd`, `11th`, `21st`.
pub fn ordinal(k: u64) -> String {
    let suffix = match (k % 10, k % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{k}{suffix}")
}

/// Phrase builder for one node: its primitive plus its drawn literals.
#[derive(Debug, Clone, Copy)]
pub struct NodeClass<'a> {
    prim: PrimitiveId,
    p: &'a NodeParams,
}

impl<'a> NodeClass<'a> {
    pub fn new(prim: PrimitiveId, p: &'a NodeParams) -> NodeClass<'a> {
        NodeClass { prim, p }
    }

    fn missing(&self, what: &str) -> Error {
        Error::Template(format!("{} has no {what}", self.prim))
    }

    fn no_arg(&self, f: &str) -> Error {
        Error::Template(format!("{}.{f} takes no argument here", self.prim))
    }

    fn h(&self) -> Result<String> {
        self.p.h.map(|a| format!("attr_{a}")).ok_or_else(|| self.missing("h"))
    }

    fn val(&self) -> Result<String> {
        self.p.val.map(|v| v.to_string()).ok_or_else(|| self.missing("val"))
    }

    fn val2(&self) -> Result<String> {
        self.p.val2.map(|v| v.to_string()).ok_or_else(|| self.missing("val2"))
    }

    fn k(&self) -> Result<String> {
        self.p.k.map(|v| v.to_string()).ok_or_else(|| self.missing("k"))
    }

    fn order(&self) -> Result<String> {
        self.p.k.map(ordinal).ok_or_else(|| self.missing("order"))
    }

    fn col(&self) -> Result<String> {
        self.p.col.map(|a| format!("attr_{a}")).ok_or_else(|| self.missing("col"))
    }

    fn idx(&self) -> usize {
        self.prim.index()
    }

    pub fn link_scope(&self) -> Result<&'static str> {
        match self.idx() {
            0 | 1 | 2 | 6 => Ok("among"),
            3 | 4 | 5 | 7 => Ok("of"),
            _ => Err(self.missing("link_scope")),
        }
    }

    pub fn leaf_scope(&self) -> Result<String> {
        match self.idx() {
            0 => Ok(format!(
                "the items that satisfy its {} is greater than {} among all items",
                self.h()?,
                self.val()?
            )),
            1 => Ok(format!("the largest {} items for {} among all items", self.k()?, self.h()?)),
            2 => Ok(format!(
                "the items that satisfy its {} is greater than its {} among all items",
                self.h()?,
                self.col()?
            )),
            _ => Err(self.missing("leaf_scope")),
        }
    }

    pub fn scope(&self, val: Option<&str>) -> Result<String> {
        match self.idx() {
            0 | 2 => {
                let v = match val {
                    Some(v) => v.to_string(),
                    None if self.idx() == 0 => self.val()?,
                    None => self.col()?,
                };
                Ok(format!("the items that satisfy its {} is greater than {v}", self.h()?))
            }
            1 if val.is_none() => Ok(format!("the largest {} items for {}", self.k()?, self.h()?)),
            1 => Err(self.no_arg("scope")),
            _ => Err(self.missing("scope")),
        }
    }

    pub fn question(&self, val: Option<&str>, val2: Option<&str>) -> Result<String> {
        if val2.is_some() && self.idx() != 8 {
            return Err(self.no_arg("question"));
        }
        match self.idx() {
            0 | 2 => {
                let v = match val {
                    Some(v) => v.to_string(),
                    None if self.idx() == 0 => self.val()?,
                    None => self.col()?,
                };
                Ok(format!("which items satisfy its {} is greater than {v}", self.h()?))
            }
            1 => self.bare(val, || {
                Ok(format!("which are the largest {} items for {}", self.k()?, self.h()?))
            }),
            3 => self.bare(val, || Ok(format!("what is the {} largest {}", self.order()?, self.h()?))),
            4 => self.bare(val, || Ok(format!("what is the sum of {}", self.h()?))),
            5 => self.bare(val, || Ok("what is the number".to_string())),
            6 => self.bare(val, || {
                Ok(format!("which item has the {} largest {}", self.order()?, self.h()?))
            }),
            7 => match val {
                Some(row) => Ok(format!("what is the {} of {row}", self.h()?)),
                None => Ok(format!("what is the {}", self.h()?)),
            },
            8 => {
                let v = val.ok_or_else(|| self.missing("question without val"))?;
                let v2 = match val2 {
                    Some(v2) => v2.to_string(),
                    None => self.val2()?,
                };
                Ok(format!("what is {v} plus {v2}"))
            }
            _ => Err(self.missing("question")),
        }
    }

    pub fn leaf_value(&self) -> Result<String> {
        match self.idx() {
            3 => Ok(format!("the {} largest {} of all items", self.order()?, self.h()?)),
            4 => Ok(format!("the sum of {} of all items", self.h()?)),
            5 => Ok("the number of all items".to_string()),
            6 => Ok(format!(
                "the item that has the {} largest {} among all items",
                self.order()?,
                self.h()?
            )),
            9 => Ok(format!("its {} plus {}", self.h()?, self.val()?)),
            _ => Err(self.missing("leaf_value")),
        }
    }

    pub fn value(&self, val: Option<&str>, val2: Option<&str>) -> Result<String> {
        if val2.is_some() && self.idx() != 8 {
            return Err(self.no_arg("value"));
        }
        match self.idx() {
            3 => self.bare(val, || Ok(format!("the {} largest {}", self.order()?, self.h()?))),
            4 => self.bare(val, || Ok(format!("the sum of {}", self.h()?))),
            5 => self.bare(val, || Ok("the number".to_string())),
            6 => self.bare(val, || {
                Ok(format!("the item that has {} largest {}", self.order()?, self.h()?))
            }),
            7 => match val {
                Some(row) => Ok(format!("the {} of {row}", self.h()?)),
                None => Ok(format!("the {}", self.h()?)),
            },
            8 => {
                let v = val.ok_or_else(|| self.missing("value without val"))?;
                let v2 = match val2 {
                    Some(v2) => v2.to_string(),
                    None => self.val2()?,
                };
                Ok(format!("{v} plus {v2}"))
            }
            9 => {
                let v = match val {
                    Some(v) => v.to_string(),
                    None => self.val()?,
                };
                Ok(format!("its {} plus {v}", self.h()?))
            }
            _ => Err(self.missing("value")),
        }
    }

    fn bare(&self, val: Option<&str>, f: impl FnOnce() -> Result<String>) -> Result<String> {
        if val.is_some() {
            return Err(self.no_arg("call"));
        }
        f()
    }
}

/// Question for a scheme instance, from the template of its typed label.
pub fn generate_question(s: &Scheme, params: &[NodeParams]) -> Result<String> {
    let n: Vec<NodeClass> = s
        .assignment
        .iter()
        .zip(params)
        .map(|(&prim, p)| NodeClass::new(prim, p))
        .collect();
    let label = s.typed_label.to_string();
    render_template(&label, &n).map_err(|e| Error::Template(format!("{}: {e}", s.scheme_id)))
}

/// Fills the template for `label` with node classes `n[0..4]`.
pub fn render_template(label: &str, n: &[NodeClass]) -> Result<String> {
    let [n0, n1, n2, n3] = n else {
        return Err(Error::Template("templates take four nodes".into()));
    };
    let q = match label {
        "0-AAA" => format!(
            "Among {} {} {}, {} {} {} among them?",
            n1.scope(None)?,
            n1.link_scope()?,
            n0.leaf_scope()?,
            n3.question(None, None)?,
            n3.link_scope()?,
            n2.scope(None)?
        ),
        "0-AAB" => {
            let v = format!(
                "{} {} {} {} {}",
                n2.value(None, None)?,
                n2.link_scope()?,
                n1.scope(None)?,
                n1.link_scope()?,
                n0.leaf_scope()?
            );
            format!("Among all items, {}?", n3.question(Some(&v), None)?)
        }
        "0-ABA" => {
            let v = format!("{} {} {}", n1.value(None, None)?, n1.link_scope()?, n0.leaf_scope()?);
            format!(
                "{} {}, {}?",
                n3.link_scope()?,
                n2.scope(Some(&v))?,
                n3.question(None, None)?
            )
        }
        "0-ABB" => {
            let v1 = format!("{} {} {}", n1.value(None, None)?, n1.link_scope()?, n0.leaf_scope()?);
            let v2 = n2.value(Some(&v1), None)?;
            format!("Among all items, {}?", n3.question(Some(&v2), None)?)
        }
        "0-BAA" => format!(
            "Among {}, {} {} {} among them?",
            n1.scope(Some(&n0.leaf_value()?))?,
            n3.question(None, None)?,
            n3.link_scope()?,
            n2.scope(None)?
        ),
        "0-BAB" => {
            let v = format!(
                "{} {} {}",
                n2.value(None, None)?,
                n2.link_scope()?,
                n1.scope(Some(&n0.leaf_value()?))?
            );
            format!("Among all items, {}?", n3.question(Some(&v), None)?)
        }
        "0-BBA" => {
            let v = n1.value(Some(&n0.leaf_value()?), None)?;
            format!(
                "{} {}, {}?",
                n3.link_scope()?,
                n2.scope(Some(&v))?,
                n3.question(None, None)?
            )
        }
        "0-BBB" => {
            let v1 = n1.value(Some(&n0.leaf_value()?), None)?;
            let v2 = n2.value(Some(&v1), None)?;
            format!("Among all items, {}?", n3.question(Some(&v2), None)?)
        }
        "1-ABA" => format!(
            "Among {}, {} {} {}?",
            n0.leaf_scope()?,
            n3.question(None, None)?,
            n3.link_scope()?,
            n2.scope(Some(&n1.leaf_value()?))?
        ),
        "1-BBB" => {
            let v = n2.value(Some(&n0.leaf_value()?), Some(&n1.leaf_value()?))?;
            format!("Among all items, {}?", n3.question(Some(&v), None)?)
        }
        "2-AAB" => format!(
            "Among {} {} {}, {}?",
            n1.scope(None)?,
            n1.link_scope()?,
            n0.leaf_scope()?,
            n3.question(Some(&n2.leaf_value()?), None)?
        ),
        "2-ABA" => {
            let v = format!("{} {} {}", n1.value(None, None)?, n1.link_scope()?, n0.leaf_scope()?);
            format!("Among {}, {}?", n2.leaf_scope()?, n3.question(Some(&v), None)?)
        }
        "2-ABB" => {
            let v = format!("{} {} {}", n1.value(None, None)?, n1.link_scope()?, n0.leaf_scope()?);
            format!("{}?", n3.question(Some(&v), Some(&n2.leaf_value()?))?)
        }
        "2-BBA" => {
            let v = n1.value(Some(&n0.leaf_value()?), None)?;
            format!("Among {}, {}?", n2.leaf_scope()?, n3.question(Some(&v), None)?)
        }
        "3-AAB" => {
            let v = format!("{} {} group A", n2.value(None, None)?, n2.link_scope()?);
            format!(
                "Assuming that group A contains {}, {} {} {} among group A?",
                n0.leaf_scope()?,
                n3.question(Some(&v), None)?,
                n3.link_scope()?,
                n1.scope(None)?
            )
        }
        "3-ABB" => {
            let v1 = format!("{} {} them", n1.value(None, None)?, n1.link_scope()?);
            let v2 = format!("{} {} them", n2.value(None, None)?, n2.link_scope()?);
            format!(
                "Among {}, {}?",
                n0.leaf_scope()?,
                n3.question(Some(&v1), Some(&v2))?
            )
        }
        "4-AAB" => {
            let v = format!("{} {} them", n2.value(None, None)?, n2.link_scope()?);
            format!(
                "Among {} {} {}, {}?",
                n1.scope(None)?,
                n1.link_scope()?,
                n0.leaf_scope()?,
                n3.question(Some(&v), None)?
            )
        }
        "5-ABA" => {
            let v = format!("{} {} them", n1.value(None, None)?, n1.link_scope()?);
            format!(
                "Among {}, {} {} {} among them?",
                n0.leaf_scope()?,
                n3.question(None, None)?,
                n3.link_scope()?,
                n2.scope(Some(&v))?
            )
        }
        other => return Err(Error::Template(format!("no template for label {other}"))),
    };
    Ok(q)
}

/// Question for a one-node sample that reads the whole table.
pub fn standalone_question(prim: PrimitiveId, p: &NodeParams) -> Result<String> {
    let c = NodeClass::new(prim, p);
    let q = match prim.index() {
        8 => c.question(Some(&c.val()?), None)?,
        _ => c.question(None, None)?,
    };
    Ok(format!("Among all items, {q}?"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals() {
        let got: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 101, 111].map(ordinal).to_vec();
        assert_eq!(
            got,
            ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "101st", "111th"]
        );
    }

    #[test]
    fn class_rejects_unsupported_arguments() {
        let p = NodeParams {
            h: Some(5),
            k: Some(3),
            ..Default::default()
        };
        let f1 = NodeClass::new(PrimitiveId::new(1).unwrap(), &p);
        assert!(f1.scope(Some("x")).is_err());
        assert!(f1.value(None, None).is_err());
        assert_eq!(f1.question(None, None).unwrap(), "which are the largest 3 items for attr_5");
    }
}

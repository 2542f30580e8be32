use std::collections::{BTreeMap, HashMap};

use candle_core::{DType, Device, Shape, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Named trainable tensors. Iteration order is the lexical name order, which
/// keeps initialization, optimizer updates and serialization deterministic.
#[derive(Debug, Clone)]
pub struct ParamStore {
    vars: BTreeMap<String, Var>,
    dtype: DType,
    device: Device,
}

impl ParamStore {
    pub fn new(dtype: DType, device: &Device) -> Self {
        Self {
            vars: BTreeMap::new(),
            dtype,
            device: device.clone(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn vars(&self) -> &BTreeMap<String, Var> {
        &self.vars
    }

    pub fn get(&self, name: &str) -> Option<&Var> {
        self.vars.get(name)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_elements(&self) -> usize {
        self.vars.values().map(|v| v.elem_count()).sum()
    }

    fn insert(&mut self, name: String, var: Var) -> Result<()> {
        if self.vars.contains_key(&name) {
            return Err(Error::config(format!("duplicate parameter name {name}")));
        }
        self.vars.insert(name, var);
        Ok(())
    }

    /// Detached copies of every parameter, keyed by name.
    pub fn snapshot(&self) -> Result<BTreeMap<String, Tensor>> {
        self.vars
            .iter()
            .map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?)))
            .collect()
    }

    /// Overwrites every parameter from `tensors[prefix + name]`.
    pub fn load(&self, tensors: &HashMap<String, Tensor>, prefix: &str) -> Result<()> {
        for (name, var) in &self.vars {
            let key = format!("{prefix}{name}");
            let t = tensors
                .get(&key)
                .ok_or_else(|| Error::invalid(format!("checkpoint lacks tensor {key}")))?;
            if t.dims() != var.dims() {
                return Err(Error::shape(var.dims(), t.dims()));
            }
            var.set(&t.to_dtype(self.dtype)?.to_device(&self.device)?)?;
        }
        Ok(())
    }
}

/// Scoped parameter factory. `pp` descends into a sub-namespace.
pub struct Init<'a> {
    store: &'a mut ParamStore,
    rng: &'a mut ChaCha8Rng,
    prefix: String,
}

impl<'a> Init<'a> {
    pub fn new(store: &'a mut ParamStore, rng: &'a mut ChaCha8Rng) -> Self {
        Self {
            store,
            rng,
            prefix: String::new(),
        }
    }

    pub fn pp(&mut self, name: &str) -> Init<'_> {
        let prefix = if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{name}", self.prefix)
        };
        Init {
            store: self.store,
            rng: self.rng,
            prefix,
        }
    }

    fn full_name(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{name}", self.prefix)
        }
    }

    pub fn dtype(&self) -> DType {
        self.store.dtype
    }

    pub fn device(&self) -> Device {
        self.store.device.clone()
    }

    /// Gaussian-initialized parameter with standard deviation `std`.
    pub fn normal(&mut self, name: &str, shape: impl Into<Shape>, std: f64) -> Result<Var> {
        let shape = shape.into();
        let data: Vec<f64> = (0..shape.elem_count())
            .map(|_| self.rng.sample::<f64, _>(StandardNormal) * std)
            .collect();
        self.from_vec(name, shape, data)
    }

    pub fn zeros(&mut self, name: &str, shape: impl Into<Shape>) -> Result<Var> {
        let shape = shape.into();
        let data = vec![0.0; shape.elem_count()];
        self.from_vec(name, shape, data)
    }

    fn from_vec(&mut self, name: &str, shape: Shape, data: Vec<f64>) -> Result<Var> {
        let t = Tensor::from_vec(data, shape, &self.store.device)?.to_dtype(self.store.dtype)?;
        let var = Var::from_tensor(&t)?;
        self.store.insert(self.full_name(name), var.clone())?;
        Ok(var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn seeded_init_is_reproducible() {
        let build = || {
            let mut store = ParamStore::new(DType::F32, &Device::Cpu);
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut init = Init::new(&mut store, &mut rng);
            init.pp("a").normal("w", (3, 4), 1.0).unwrap();
            init.pp("b").zeros("bias", 2).unwrap();
            store
        };
        let (a, b) = (build(), build());
        assert_eq!(a.vars().keys().collect::<Vec<_>>(), vec!["a.w", "b.bias"]);
        let av = a.get("a.w").unwrap().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        let bv = b.get("a.w").unwrap().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(av, bv);
        assert_eq!(a.num_elements(), 14);
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::new(DType::F32, &Device::Cpu);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut init = Init::new(&mut store, &mut rng);
        init.zeros("x", 1).unwrap();
        assert!(init.zeros("x", 1).is_err());
    }
}

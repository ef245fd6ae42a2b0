use super::instance::ProcessInstance;

/// Time-sliced executor over a set of process instances.
///
/// Instances are stepped in insertion order; within an instance tasks run
/// in activation order. A task activated while a step resolves waits for
/// the next step.
pub struct Executor<W> {
    instances: Vec<ProcessInstance<W>>,
}

impl<W> Default for Executor<W> {
    fn default() -> Self {
        Self { instances: Vec::new() }
    }
}

impl<W> Executor<W> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an instance and activates its root. Returns its index.
    pub fn add(&mut self, mut instance: ProcessInstance<W>) -> usize {
        instance.start();
        self.instances.push(instance);
        self.instances.len() - 1
    }

    /// One time slice: every runnable task is invoked exactly once.
    pub fn step(&mut self, world: &mut W) -> usize {
        self.instances.iter_mut().map(|i| i.run_slice(world)).sum()
    }

    pub fn wake(&mut self, key: &str) -> usize {
        self.instances.iter_mut().map(|i| i.wake(key)).sum()
    }

    pub fn instances(&self) -> &[ProcessInstance<W>] {
        &self.instances
    }

    pub fn instance(&self, idx: usize) -> Option<&ProcessInstance<W>> {
        self.instances.get(idx)
    }

    pub fn instance_mut(&mut self, idx: usize) -> Option<&mut ProcessInstance<W>> {
        self.instances.get_mut(idx)
    }

    pub fn all_finished(&self) -> bool {
        self.instances.iter().all(ProcessInstance::is_finished)
    }
}

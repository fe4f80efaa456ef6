//! One design run: input, settings, state and the artifacts produced so far.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    cmd_generate, cmd_plan, cmd_postprocess, cmd_validate, synthesize_gcode, GcodeSource, Generated, RunReport,
    ValidationReport, DISPLAY_STL, GCODE_OUT, PLAN_JSON, PREVIEW_JSON, REPORT_JSON,
};
use crate::cells::{CellReport, DisplayModel};
use crate::constraints::{CellSpec, PrinterProfile};
use crate::mesh::{stl_bytes, TriMesh};
use crate::planner::InjectionPlan;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Created,
    Generated,
    Planned,
    Postprocessed,
    Failed,
}

impl JobState {
    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Created => "created",
            JobState::Generated => "generated",
            JobState::Planned => "planned",
            JobState::Postprocessed => "postprocessed",
            JobState::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobError {
    pub code: String,
    pub message: String,
}

impl From<&Error> for JobError {
    fn from(e: &Error) -> Self {
        JobError {
            code: e.code().into(),
            message: e.to_string(),
        }
    }
}

/// Serializable view of a job at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub id: u64,
    pub name: String,
    pub state: JobState,
    pub spec: CellSpec,
    pub profile: PrinterProfile,
    pub error: Option<JobError>,
    pub artifacts: Vec<String>,
    pub cells: Option<CellReport>,
}

/// State only moves forward (created, generated, planned, postprocessed) or
/// to failed, and an artifact exists once the step producing it has run.
#[derive(Clone, Debug)]
pub struct Job {
    pub id: u64,
    pub name: String,
    pub spec: CellSpec,
    pub profile: PrinterProfile,
    mesh: TriMesh,
    state: JobState,
    error: Option<JobError>,
    generated: Option<Generated>,
    plan: Option<InjectionPlan>,
    artifacts: BTreeMap<String, Vec<u8>>,
}

impl Job {
    pub fn new(id: u64, name: impl Into<String>, mesh: TriMesh, spec: CellSpec, profile: PrinterProfile) -> Self {
        Job {
            id,
            name: name.into(),
            spec,
            profile,
            mesh,
            state: JobState::Created,
            error: None,
            generated: None,
            plan: None,
            artifacts: BTreeMap::new(),
        }
    }

    pub fn state(&self) -> JobState {
        self.state
    }

    pub fn error(&self) -> Option<&JobError> {
        self.error.as_ref()
    }

    pub fn violations(&self) -> ValidationReport {
        cmd_validate(&self.spec, &self.profile)
    }

    pub fn model(&self) -> Option<&DisplayModel> {
        self.generated.as_ref().and_then(|g| g.model.as_ref())
    }

    pub fn plan_result(&self) -> Option<&InjectionPlan> {
        self.plan.as_ref()
    }

    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.get(name).map(Vec::as_slice)
    }

    pub fn artifacts(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.artifacts.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn summary(&self) -> JobSummary {
        JobSummary {
            id: self.id,
            name: self.name.clone(),
            state: self.state,
            spec: self.spec.clone(),
            profile: self.profile.clone(),
            error: self.error.clone(),
            artifacts: self.artifacts.keys().cloned().collect(),
            cells: self.generated.as_ref().map(|g| g.report.clone()),
        }
    }

    fn expect(&self, want: JobState, action: &str) -> Result<()> {
        if self.state == want {
            Ok(())
        } else {
            Err(Error::JobState(format!(
                "cannot {action} a job in state {}; it must be {}",
                self.state.as_str(),
                want.as_str()
            )))
        }
    }

    /// Runs `step`; any error fails the job for good.
    fn run<T>(&mut self, step: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let out = step(self);
        if let Err(e) = &out {
            self.state = JobState::Failed;
            self.error = Some(JobError::from(e));
        }
        out
    }

    pub fn generate(&mut self) -> Result<()> {
        self.expect(JobState::Created, "generate")?;
        self.run(|job| {
            let g = cmd_generate(&job.mesh, &job.spec, &job.profile, false)?;
            let model = g.model.as_ref().expect("full generation yields a model");
            job.artifacts.insert(DISPLAY_STL.into(), stl_bytes(&model.printable));
            job.artifacts.insert(PREVIEW_JSON.into(), g.preview_json().into_bytes());
            job.generated = Some(g);
            job.state = JobState::Generated;
            Ok(())
        })
    }

    pub fn plan(&mut self) -> Result<()> {
        self.expect(JobState::Generated, "plan")?;
        self.run(|job| {
            let plan = cmd_plan(job.model().expect("generated jobs hold a model"), &job.profile);
            job.artifacts.insert(PLAN_JSON.into(), plan.to_json().into_bytes());
            job.plan = Some(plan);
            job.state = JobState::Planned;
            Ok(())
        })
    }

    /// Splices the plan into `gcode_in`, or into synthesized perimeters when `None`.
    pub fn postprocess(&mut self, gcode_in: Option<&str>) -> Result<()> {
        self.expect(JobState::Planned, "postprocess")?;
        self.run(|job| {
            let generated = job.generated.as_ref().expect("planned jobs were generated");
            let plan = job.plan.as_ref().expect("planned jobs hold a plan");
            let (text, source) = match gcode_in {
                Some(t) => (t.to_string(), GcodeSource::Supplied),
                None => (
                    synthesize_gcode(generated.model.as_ref().expect("model"), &job.profile),
                    GcodeSource::Synthesized,
                ),
            };
            let post = cmd_postprocess(&text, plan, &job.profile)?;
            let report = RunReport::new(job.violations(), generated, plan, &post, source, &job.profile);
            job.artifacts.insert(GCODE_OUT.into(), post.gcode.into_bytes());
            job.artifacts.insert(REPORT_JSON.into(), report.to_json().into_bytes());
            job.state = JobState::Postprocessed;
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::Shape;
    use crate::mesh::primitives;

    fn job(spec: CellSpec) -> Job {
        Job::new(1, "plate", primitives::sheet(30.0, 30.0, 4, 4), spec, PrinterProfile::default())
    }

    #[test]
    fn states_move_forward_only() {
        let mut j = job(CellSpec::new(Shape::Square, 4.0, 1.0, 3.0, 0.6));
        assert_eq!(j.state(), JobState::Created);
        assert!(j.artifacts().next().is_none());
        assert_eq!(j.plan().unwrap_err().code(), "job_state");
        assert_eq!(j.state(), JobState::Created);
        j.generate().unwrap();
        assert_eq!(j.summary().artifacts, vec![DISPLAY_STL, PREVIEW_JSON]);
        assert_eq!(j.generate().unwrap_err().code(), "job_state");
        j.plan().unwrap();
        assert!(j.artifact(PLAN_JSON).is_some());
        j.postprocess(None).unwrap();
        assert_eq!(j.state(), JobState::Postprocessed);
        assert_eq!(j.artifacts().count(), 5);
    }

    #[test]
    fn failure_is_terminal() {
        let mut j = job(CellSpec::new(Shape::Square, 9.0, 1.0, 3.0, 0.6));
        assert_eq!(j.generate().unwrap_err().code(), "spec_invalid");
        assert_eq!(j.state(), JobState::Failed);
        assert_eq!(j.error().unwrap().code, "spec_invalid");
        assert!(j.artifacts().next().is_none());
        assert_eq!(j.generate().unwrap_err().code(), "job_state");
    }
}

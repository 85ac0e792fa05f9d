use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crate::design::DesignError;
use crate::environment::EnvironmentError;
use crate::ergonomics::ErgonomicsError;
use crate::estimators::{LightingError, RequirementError, StabilityError};
use crate::geometry::GeometryError;
use crate::sketch::SketchError;

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    pub fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, what)
    }

    pub fn unprocessable(message: impl ToString) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message.to_string())
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match self.status {
            StatusCode::NOT_FOUND => "not_found",
            StatusCode::CONFLICT => "conflict",
            StatusCode::UNPROCESSABLE_ENTITY => "unprocessable",
            _ => "error",
        };
        (self.status, Json(json!({ "error": code, "message": self.message }))).into_response()
    }
}

impl From<DesignError> for ApiError {
    fn from(e: DesignError) -> Self {
        match e {
            DesignError::UnknownDesign(_) => Self::not_found(e.to_string()),
            _ => Self::unprocessable(e),
        }
    }
}

macro_rules! unprocessable_from {
    ($($t:ty),*) => {$(
        impl From<$t> for ApiError {
            fn from(e: $t) -> Self {
                Self::unprocessable(e)
            }
        }
    )*};
}

unprocessable_from!(
    EnvironmentError,
    ErgonomicsError,
    LightingError,
    RequirementError,
    StabilityError,
    GeometryError,
    SketchError,
    serde_json::Error
);

/** Wire types of the prediction service (/api/v1). */

export interface FeatureSpec {
    name: string;
    unit: string;
    description: string;
}

export interface SchemaDoc {
    features: FeatureSpec[];
    target: FeatureSpec;
}

export interface MetricDoc {
    r2: number | null;
    mse: number;
    mae: number;
    rmse: number;
    n: number;
    r2_degenerate: boolean;
}

export interface ModelDoc {
    family: string;
    hyperparameters: Record<string, unknown>;
    metrics: { train?: MetricDoc; test?: MetricDoc };
    feature_ranges: Record<string, [number, number]>;
    created_at?: string | null;
    seed?: number | null;
    training_rows?: number | null;
    format_version: number;
}

export interface ShapDoc {
    base_value: number;
    phi: number[];
    prediction: number;
    features: string[] | null;
}

export interface PredictRequest {
    features: Record<string, number>;
    explain: boolean;
}

export interface PredictResponse {
    p_kn: number;
    p_kn_display: string;
    extrapolation_flags: Record<string, boolean>;
    shap: ShapDoc | null;
}

export interface ServiceError {
    error: string;
    feature?: string;
    column?: string;
    row?: number;
    limit?: number;
}

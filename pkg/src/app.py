#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import io
import os

from flask import Flask, jsonify, request, send_file

from src import __version__
from src.config import get_config, load_pipeline_config
from src.database.model_store import load_model
from src.database.wav_io import read_wav_bytes, wav_bytes
from src.models.configs import DfsmnConfig
from src.models.dfsmn_model import count_params
from src.services.pipeline import run_pipeline
from src.utils.errors import AecError


def _read_upload(field_name: str):
    upload = request.files.get(field_name)
    if upload is None:
        raise AecError(f"missing multipart field '{field_name}'")
    return read_wav_bytes(upload.read(), name=field_name)


def create_app(config_class=None, model=None) -> Flask:
    """建立 Flask 服務；model 未指定時依 AEC_MODEL_PATH 載入（未設定則只做 LAEC）"""
    config_class = config_class or get_config()
    app = Flask(__name__)
    app.config.from_object(config_class)

    pipeline_config = load_pipeline_config(base=config_class)
    if model is None and pipeline_config.model_path:
        if os.path.isfile(pipeline_config.model_path):
            model = load_model(pipeline_config.model_path)
        else:
            app.logger.warning(f"[SERVICE] Model file not found: {pipeline_config.model_path}")
    app.extensions['aec'] = {'config': pipeline_config, 'model': model}

    @app.route("/")
    def hello():
        return "Streaming AEC service running"

    @app.route("/health")
    def health_check():
        return {"status": "healthy", "service": "aec-pipeline", "model_loaded": model is not None}

    @app.route("/info")
    def info():
        net_config = model.config if model is not None else DfsmnConfig()
        return {
            "version": __version__,
            "model_loaded": model is not None,
            "dfsmn": net_config.to_dict(),
            "num_params": count_params(net_config),
            "pipeline": {
                "outputs": pipeline_config.outputs,
                "beta_vad": pipeline_config.pwf.beta_vad,
                "beta_asr": pipeline_config.pwf.beta_asr,
                "max_delay_ms": pipeline_config.max_delay_ms,
                "mask_mode": pipeline_config.mask_mode,
            },
        }

    @app.route("/process", methods=['POST'])
    def process():
        output = request.args.get('output', 'asr')
        if output not in ('vad', 'asr'):
            return jsonify({"error": "output must be 'vad' or 'asr'"}), 400
        if model is None and request.args.get('laec_only', 'false').lower() != 'true':
            return jsonify({"error": "no model loaded (pass laec_only=true for the linear stage only)"}), 503

        try:
            reference = _read_upload('reference')
            mic = _read_upload('mic')
            config = pipeline_config.with_overrides(outputs=output)
            result = run_pipeline(config, reference, mic, model=model)
        except AecError as e:
            app.logger.warning(f"[SERVICE] Rejected request: {e}")
            return jsonify({"error": str(e)}), 400

        app.logger.info(f"[SERVICE] Processed {mic.size} samples, delay {result.delay.delay_samples}")
        payload = io.BytesIO(wav_bytes(result.outputs[output]))
        return send_file(payload, mimetype='audio/wav', download_name=f'{output}.wav')

    return app


app = create_app()

import importlib.util
import json
import math
from pathlib import Path

import pytest

from configuracao import APROXIMACAO
from dominio_plano import make_annulus, make_disk
from entrada_saida import serializar_tripla
from nucleo_weierstrass import catenoid_triple, plane_triple

RAIZ = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def app():
    spec = importlib.util.spec_from_file_location("app_superficies", RAIZ / "app.py")
    modulo = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(modulo)
    return modulo


def _resumo(capsys):
    return json.loads(capsys.readouterr().out)


def test_config_inexistente(app, tmp_path, capsys):
    assert app.main(["construct", "--config", str(tmp_path / "nada.json")]) == app.SAIDA_USO
    assert _resumo(capsys)["status"] == "erro"


def test_config_malformada(app, tmp_path, capsys):
    caminho = tmp_path / "ruim.json"
    caminho.write_text('{"spec_version": "1.0",\n  "dominio": }', encoding="utf-8")
    assert app.main(["stage", "--config", str(caminho)]) == app.SAIDA_USO
    assert "linha 2" in _resumo(capsys)["erro"]


def test_estagio_exige_duas_regioes(app, tmp_path, capsys):
    caminho = tmp_path / "um.json"
    caminho.write_text(json.dumps({"spec_version": "1.0", "dominio": {"tipo": "disk-tower"},
                                   "prescricao": {"h": "re-z"}, "fluxo": [0, 0, 0],
                                   "solver": {"estagios": 1}}), encoding="utf-8")
    assert app.main(["stage", "--config", str(caminho)]) == app.SAIDA_USO
    capsys.readouterr()


def test_labirinto(app, tmp_path, capsys):
    codigo = app.main(["labyrinth", "--r", "0.25", "--R", "1.0", "--N", "3", "--angular", "16",
                       "--saida", str(tmp_path)])
    assert codigo == app.SAIDA_OK
    resumo = _resumo(capsys)
    assert resumo["bandas"] == 18
    assert (tmp_path / "labirinto_N3.json").exists()
    linhas = (tmp_path / "pertinencia_N3.csv").read_text(encoding="utf-8").splitlines()
    assert linhas[0] == "no,i,j,re,im,banda"
    assert len(linhas) == 163 * 16 + 1


def test_labirinto_que_nao_cabe(app, tmp_path, capsys):
    codigo = app.main(["labyrinth", "--r", "0.25", "--R", "1.0", "--N", "2", "--saida", str(tmp_path)])
    assert codigo == app.SAIDA_FALHA
    assert _resumo(capsys)["status"] == "falha"


def test_export_de_relatorios(app, tmp_path, capsys):
    entrada = tmp_path / "relatorios.jsonl"
    linha = {"stage": 1, "sup_change": 0.1, "sup_change_target": 1.0, "distance": 2.0,
             "distance_target": 1.0, "flux_err": 0.0, "h_err": 0.0, "min_phi3": 1.0,
             "N": 3, "M": 324.0, "mu": 0.9, "aprovado": True}
    entrada.write_text(json.dumps(linha) + "\n", encoding="utf-8")
    destino = tmp_path / "saida" / "relatorios.csv"
    assert app.main(["export", "--relatorios", str(entrada), "--csv", str(destino)]) == app.SAIDA_OK
    capsys.readouterr()
    linhas = destino.read_text(encoding="utf-8").splitlines()
    assert linhas[0].startswith("stage,sup_change,sup_change_target,distance")
    assert len(linhas) == 2


def _escrever_config(caminho, **extras):
    dados = {"spec_version": "1.0", "dominio": {"tipo": "disk-tower"}, "prescricao": {"h": "re-z"},
             "fluxo": [0, 0, 0], "solver": {"estagios": 1}, "grade": {"radial": 17, "angular": 32}}
    dados.update(extras)
    caminho.write_text(json.dumps(dados), encoding="utf-8")
    return str(caminho)


@pytest.fixture
def tripla_do_plano(tmp_path):
    caminho = tmp_path / "plano.json"
    caminho.write_text(serializar_tripla(plane_triple(make_disk(1.0))), encoding="utf-8")
    return str(caminho)


def test_construct_da_semente(app, tmp_path, capsys):
    saida = {"tripla": str(tmp_path / "out" / "tripla.json"), "malha": str(tmp_path / "out" / "malha.obj"),
             "relatorios_csv": str(tmp_path / "out" / "relatorios.csv")}
    config = _escrever_config(tmp_path / "construct.json", saida=saida)
    assert app.main(["construct", "--config", config]) == app.SAIDA_OK
    resumo = _resumo(capsys)
    assert resumo["status"] == "sucesso"
    assert len(resumo["relatorios"]) == 1
    assert resumo["relatorios"][0]["sup_change"] == 0.0
    assert (tmp_path / "out" / "tripla.json").exists()
    faces = [l for l in (tmp_path / "out" / "malha.obj").read_text(encoding="utf-8").splitlines()
             if l.startswith("f ")]
    assert faces[0] == "f 1 2 3"
    assert len((tmp_path / "out" / "relatorios.csv").read_text(encoding="utf-8").splitlines()) == 2


def test_nonvanishing_da_semente(app, tmp_path, capsys):
    config = _escrever_config(tmp_path / "nao_nulo.json")
    assert app.main(["nonvanishing", "--config", config]) == app.SAIDA_OK
    resumo = _resumo(capsys)
    assert resumo["status"] == "sucesso"
    assert resumo["deriva_ok"]
    assert resumo["min_phi3_final"] == pytest.approx(1.0)


def test_verify_do_catenoide(app, tmp_path, capsys):
    caminho = tmp_path / "catenoide.json"
    caminho.write_text(serializar_tripla(catenoid_triple(make_annulus(0.5, 2.0))), encoding="utf-8")
    assert app.main(["verify", "--tripla", str(caminho), "--radial", "16", "--angular", "64"]) == app.SAIDA_OK
    resumo = _resumo(capsys)
    assert resumo["isotropia"] < 1e-10
    assert resumo["fluxo"][2] == pytest.approx(2 * math.pi, abs=1e-6)


def test_distance_no_plano(app, tmp_path, tripla_do_plano, capsys):
    codigo = app.main(["distance", "--tripla", tripla_do_plano, "--radial", "17", "--angular", "16",
                       "--saida", str(tmp_path / "dist")])
    assert codigo == app.SAIDA_OK
    resumo = _resumo(capsys)
    assert resumo["origem"] == 0
    assert resumo["distancia_fronteira"] == pytest.approx(2 ** 0.5, rel=1e-9)
    assert (tmp_path / "dist" / "distancias.csv").exists()
    assert (tmp_path / "dist" / "caminho.csv").exists()


def test_export_da_malha(app, tmp_path, tripla_do_plano, capsys):
    destino = tmp_path / "plano.obj"
    codigo = app.main(["export", "--tripla", tripla_do_plano, "--malha", str(destino),
                       "--radial", "4", "--angular", "8"])
    assert codigo == app.SAIDA_OK
    assert _resumo(capsys)["malha"] == str(destino)
    linhas = destino.read_text(encoding="utf-8").splitlines()
    assert sum(l.startswith("v ") for l in linhas) == 25
    assert sum(l.startswith("f ") for l in linhas) == 24


def test_solver_da_config_nao_altera_os_padroes(app, tmp_path, capsys):
    antes = dict(APROXIMACAO)
    config = _escrever_config(tmp_path / "solver.json", solver={"estagios": 1, "grau": 16, "newton_max_iter": 7})
    assert app.main(["construct", "--config", config]) == app.SAIDA_OK
    capsys.readouterr()
    assert APROXIMACAO == antes

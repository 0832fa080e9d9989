"""CLI 入口 — 使用 typer + rich 构建命令行界面"""

import logging
import sys
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.table import Table

from rbdiag_cli import __version__
from rbdiag_cli.aggregation import FusionMode
from rbdiag_cli.config import DEFAULT_OUTPUT_DIR, DEFAULT_PHANTOM_DIAMETER_MM
from rbdiag_cli.errors import RbdiagError, StageError

# 进度日志写到 stderr，stdout 只留给报告
logging.basicConfig(
    level=logging.INFO,
    format="%(message)s",
    stream=sys.stderr,
)

console = Console()
app = typer.Typer(
    name="rbdiag",
    help="👁️ rbdiag — 视网膜母细胞瘤去噪、分割与分级工具",
    no_args_is_help=True,
    rich_markup_mode="rich",
)

IMAGE_SUFFIXES = {".pgm", ".ppm", ".pnm"}

# 命令统一转换为单行错误的异常
CLI_ERRORS = (RbdiagError, ValueError, OSError)


# ========================================================================
# 公共工具
# ========================================================================


def _fail(stage: str, e: Exception) -> None:
    """打印单行错误 "<stage>: <原因>" 并以退出码 1 结束"""
    if isinstance(e, StageError):
        message = str(e)
    else:
        message = f"{getattr(e, 'stage', '') or stage}: {e}"
    console.print(f"[red]✗[/red] {message}", markup=True, highlight=False, soft_wrap=True)
    raise typer.Exit(1)


def _run_config(ctx: typer.Context):
    from rbdiag_cli.settings import load_run_config

    obj = ctx.obj or {}
    return load_run_config(obj.get("config"), obj.get("seed"))


def _given(**overrides) -> dict:
    """只保留命令行上实际给出的覆盖项"""
    return {k: v for k, v in overrides.items() if v is not None}


def _parse_floats(text: Optional[str], count: int, name: str) -> Optional[tuple[float, ...]]:
    if text is None:
        return None
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise typer.BadParameter(f"{name} 需要 {count} 个逗号分隔的数字，实际 '{text}'")
    if len(values) != count:
        raise typer.BadParameter(f"{name} 需要 {count} 个逗号分隔的数字，实际 '{text}'")
    return values


def _load_input_volume(path: Path, config):
    """.rbvol 直接读取；PGM/PPM 取绿色通道后沿 z 复制为体数据"""
    from rbdiag_cli.imaging import lift_to_volume, load_plane, load_volume

    if path.suffix.lower() in IMAGE_SUFFIXES:
        plane = load_plane(path, config.imaging.spacing_mm)
        return lift_to_volume(plane, config.imaging.depth)
    return load_volume(path)


def _write_report(text: str, path: Optional[Path], stage: str) -> None:
    typer.echo(text, nl=False)
    if path is not None:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            _fail(stage, e)
        console.print(f"[green]✓[/green] 报告已保存到: {path}", highlight=False)


def _clinical_inputs(disc, fovea, seeding, vitreous, flags, enucleated, resected, remnants, regional, metastasis):
    from rbdiag_cli.grading import AdvancedFlag, Seeding, SurgicalFindings
    from rbdiag_cli.pipeline import ClinicalInputs

    try:
        advanced = frozenset(AdvancedFlag(f.strip()) for f in flags.split(",") if f.strip()) if flags else frozenset()
    except ValueError:
        choices = ", ".join(f.value for f in AdvancedFlag)
        raise typer.BadParameter(f"--flags 只能包含: {choices}")
    return ClinicalInputs(
        disc=_parse_floats(disc, 3, "--disc"),
        fovea=_parse_floats(fovea, 3, "--fovea"),
        subretinal_seeding=Seeding(seeding),
        vitreous_seeding=Seeding(vitreous),
        advanced_flags=advanced,
        findings=SurgicalFindings(
            enucleated=enucleated,
            completely_resected=resected,
            microscopic_remnants=remnants,
            regional_extension=regional,
            metastasis=metastasis,
        ),
    )


# 分级相关的共享选项
DiscOption = typer.Option(None, "--disc", help="视盘体素坐标 x,y,z")
FoveaOption = typer.Option(None, "--fovea", help="黄斑中心凹体素坐标 x,y,z")
SeedingOption = typer.Option("none", "--seeding", help="视网膜下播散: none / focal / diffuse")
VitreousOption = typer.Option("none", "--vitreous-seeding", help="玻璃体播散: none / focal / diffuse")
FlagsOption = typer.Option(
    None, "--flags",
    help="晚期标志，逗号分隔（touches_lens, neovascular_glaucoma, orbital_cellulitis, ...）",
)
EnucleatedOption = typer.Option(False, "--enucleated", help="已摘除眼球")
ResectedOption = typer.Option(False, "--resected", help="肿瘤已完全切除")
RemnantsOption = typer.Option(False, "--remnants", help="存在镜下残留")
RegionalOption = typer.Option(False, "--regional", help="区域扩散")
MetastasisOption = typer.Option(False, "--metastasis", help="远处转移")


# ========================================================================
# denoise 命令
# ========================================================================


@app.command()
def denoise(
    ctx: typer.Context,
    input_path: Path = typer.Option(
        ..., "--in", "--input", "-i", exists=True, dir_okay=False,
        help="输入 PGM / PPM 图像或 .rbvol 体数据",
    ),
    out: Path = typer.Option(..., "--out", "-o", help="输出路径（图像写 PGM，体数据写 .rbvol）"),
    radius: Optional[int] = typer.Option(None, "--radius", help="初始窗口半径（默认取配置）"),
    max_radius: Optional[int] = typer.Option(None, "--max-radius", help="最大窗口半径（默认取配置）"),
    density_switch: Optional[float] = typer.Option(
        None, "--density-switch", help="噪声密度切换点 (0, 1]（默认取配置）",
    ),
    reference: Optional[Path] = typer.Option(
        None, "--reference", exists=True, dir_okay=False,
        help="干净参考图像，给出时打印 PSNR",
    ),
) -> None:
    """🧹 LPDMF 去除椒盐噪声 — 只替换脉冲像素"""
    import dataclasses

    from rbdiag_cli.imaging import load_plane, load_volume, save_plane, save_volume
    from rbdiag_cli.lpdmf import denoise as denoise_plane
    from rbdiag_cli.lpdmf import denoise_volume, psnr

    try:
        config = _run_config(ctx)
        params = dataclasses.replace(config.lpdmf, **_given(
            window_radius=radius, max_radius=max_radius, density_switch=density_switch,
        ))
        if input_path.suffix.lower() in IMAGE_SUFFIXES:
            noisy = load_plane(input_path, config.imaging.spacing_mm)
            clean = denoise_plane(noisy, params)
            save_plane(clean, out)
            if reference is not None:
                ref = load_plane(reference, config.imaging.spacing_mm)
                console.print(f"PSNR: {psnr(ref, noisy):.2f} dB → {psnr(ref, clean):.2f} dB", highlight=False)
        else:
            save_volume(denoise_volume(load_volume(input_path), params), out)
    except CLI_ERRORS as e:
        _fail("denoise", e)
    console.print(f"[green]✓[/green] 去噪结果已保存到: {out}", highlight=False)


# ========================================================================
# extract 命令
# ========================================================================


@app.command()
def extract(
    ctx: typer.Context,
    vol: Path = typer.Option(..., "--vol", exists=True, dir_okay=False, help="输入 .rbvol 体数据"),
    out: Path = typer.Option(..., "--out", "-o", help="输出 .rbpatch 归档"),
    mask: Optional[Path] = typer.Option(
        None, "--mask", exists=True, dir_okay=False,
        help="真值掩膜，按中心点体素给 patch 打标签",
    ),
    stride: Optional[int] = typer.Option(None, "--stride", help="中心点步长（默认取配置）"),
    margin: Optional[int] = typer.Option(None, "--margin", help="中心点距各面的最小距离（默认取配置）"),
) -> None:
    """🧩 按中心点格点提取多视角 patch"""
    import dataclasses

    from rbdiag_cli.imaging import load_mask, load_volume
    from rbdiag_cli.patcher import build_grids, enumerate_centers, sample_patch, save_patches

    try:
        config = _run_config(ctx)
        volume = load_volume(vol)
        labels = load_mask(mask).labels if mask is not None else None
        if labels is not None and labels.shape != volume.voxels.shape:
            raise RbdiagError(f"掩膜尺寸 {labels.shape} 与体数据 {volume.dims} 不符", stage="extract")
        grid = dataclasses.replace(config.grid, **_given(stride=stride, margin=margin))
        patches = []
        for center in enumerate_centers(volume, grid.stride, grid.margin):
            label = int(labels[tuple(int(round(c)) for c in center)]) if labels is not None else None
            for g in build_grids(center, grid.size, grid.spacing)[:grid.grid_count]:
                patches.append(sample_patch(volume, g, grid.slices, grid.slice_step, label=label))
        save_patches(patches, out)
    except CLI_ERRORS as e:
        _fail("extract", e)
    console.print(f"[green]✓[/green] 已提取 {len(patches)} 个 patch → {out}", highlight=False)


# ========================================================================
# train 命令
# ========================================================================


@app.command()
def train(
    ctx: typer.Context,
    patches: Path = typer.Option(..., "--patches", "-p", exists=True, dir_okay=False, help="带标签的 .rbpatch 归档"),
    out: Path = typer.Option(..., "--out", "-o", help="输出 .rbmodel 模型文件"),
    epochs: Optional[int] = typer.Option(None, "--epochs", "-e", help="训练轮数（默认取配置）"),
    lr: Optional[float] = typer.Option(None, "--lr", help="学习率（默认取配置）"),
    seed: Optional[int] = typer.Option(None, "--seed", help="初始化与打乱顺序的随机种子（默认取配置）"),
) -> None:
    """🧠 用 SGD 训练 patch 分类 CNN"""
    import dataclasses

    from rbdiag_cli.micronet import build_network, fit, save_model
    from rbdiag_cli.patcher import load_patches

    try:
        config = _run_config(ctx)
        train_cfg = dataclasses.replace(config.train, **_given(epochs=epochs, learning_rate=lr, seed=seed))
        net_cfg = dataclasses.replace(config.net, **_given(seed=seed))
        dataset = load_patches(patches)
        model = build_network(net_cfg)
        run = fit(model, dataset, train_cfg)
        save_model(run.model, out)
    except CLI_ERRORS as e:
        _fail("train", e)

    table = Table(title=f"训练过程（{len(dataset)} 个 patch）")
    table.add_column("轮次", justify="right", style="dim")
    table.add_column("损失", justify="right", style="cyan")
    table.add_column("准确率", justify="right", style="green")
    for i, (loss, acc) in enumerate(zip(run.losses, run.accuracies), start=1):
        table.add_row(str(i), f"{loss:.4f}", f"{acc:.3f}")
    console.print(table)
    console.print(f"[green]✓[/green] 模型已保存到: {out}", highlight=False)


# ========================================================================
# segment 命令
# ========================================================================


@app.command()
def segment(
    ctx: typer.Context,
    vol: Path = typer.Option(..., "--vol", exists=True, dir_okay=False, help="输入 .rbvol 或 PGM/PPM"),
    model: Path = typer.Option(..., "--model", "-m", help=".rbmodel 模型文件"),
    out: Path = typer.Option(..., "--out", "-o", help="输出 .rbmask 掩膜"),
    mode: Optional[FusionMode] = typer.Option(None, "--mode", help="融合方式 vote / bayes（默认取配置）"),
    scores_out: Optional[Path] = typer.Option(None, "--scores", help="同时写出连续融合分数 .rbvol"),
) -> None:
    """🔍 多视角 patch 分割 + 投票 / 贝叶斯融合"""
    import dataclasses

    from rbdiag_cli.imaging import Volume, save_mask, save_volume
    from rbdiag_cli.micronet import load_model
    from rbdiag_cli.pipeline import segment_volume

    try:
        config = _run_config(ctx)
        agg = config.aggregate if mode is None else dataclasses.replace(config.aggregate, mode=mode)
        volume = _load_input_volume(vol, config)
        result = segment_volume(volume, load_model(model), config.grid, agg)
        save_mask(result.mask, out)
        if scores_out is not None:
            save_volume(Volume(volume.dims, result.scores, volume.spacing_mm), scores_out)
    except CLI_ERRORS as e:
        _fail("segment", e)
    console.print(f"[green]✓[/green] 掩膜已保存到: {out}（{result.mask.count} 个肿瘤体素）", highlight=False)


# ========================================================================
# grade 命令
# ========================================================================


@app.command()
def grade(
    ctx: typer.Context,
    mask: Path = typer.Option(..., "--mask", exists=True, dir_okay=False, help="肿瘤 .rbmask 掩膜"),
    spacing: Optional[float] = typer.Option(None, "--spacing", help="体素间距 mm（默认取配置）"),
    report: Optional[Path] = typer.Option(None, "--report", "-r", help="报告输出文件"),
    disc: Optional[str] = DiscOption,
    fovea: Optional[str] = FoveaOption,
    seeding: str = SeedingOption,
    vitreous: str = VitreousOption,
    flags: Optional[str] = FlagsOption,
    enucleated: bool = EnucleatedOption,
    resected: bool = ResectedOption,
    remnants: bool = RemnantsOption,
    regional: bool = RegionalOption,
    metastasis: bool = MetastasisOption,
) -> None:
    """🩺 病灶特征 → 分组 A–E / 分期 0–IV / 治疗建议"""
    from rbdiag_cli.imaging import load_mask
    from rbdiag_cli.pipeline import grade_mask
    from rbdiag_cli.reports import grade_report

    try:
        config = _run_config(ctx)
        clinical = _clinical_inputs(
            disc, fovea, seeding, vitreous, flags, enucleated, resected, remnants, regional, metastasis
        )
        result = grade_mask(
            load_mask(mask),
            spacing if spacing is not None else config.imaging.spacing_mm,
            clinical,
            config.grading,
        )
    except CLI_ERRORS as e:
        _fail("grade", e)
    _write_report(grade_report(result), report, "grade")


# ========================================================================
# evaluate 命令
# ========================================================================


@app.command()
def evaluate(
    truth: Path = typer.Option(..., "--truth", exists=True, dir_okay=False, help="真值 .rbmask"),
    pred: Path = typer.Option(..., "--pred", exists=True, dir_okay=False, help="预测 .rbmask"),
    scores: Optional[Path] = typer.Option(
        None, "--scores", exists=True, dir_okay=False,
        help="连续分数 .rbvol，给出时计算 AUC",
    ),
    report: Optional[Path] = typer.Option(None, "--report", "-r", help="报告输出文件"),
) -> None:
    """📊 逐体素评估 — 敏感度 / 特异度 / 准确率 / AUC"""
    from rbdiag_cli.imaging import load_mask, load_volume
    from rbdiag_cli.metrics import confusion, roc_curve
    from rbdiag_cli.reports import metrics_report

    try:
        g = load_mask(truth)
        counts = confusion(g, load_mask(pred))
        roc = roc_curve(load_volume(scores), g) if scores is not None else None
    except CLI_ERRORS as e:
        _fail("evaluate", e)
    _write_report(metrics_report(counts, roc), report, "evaluate")


# ========================================================================
# phantom 命令
# ========================================================================


@app.command()
def phantom(
    ctx: typer.Context,
    dims: str = typer.Option("64,64,64", "--dims", help="体模尺寸 nx,ny,nz"),
    tumors: int = typer.Option(2, "--tumors", help="肿瘤个数"),
    noise: float = typer.Option(0.0, "--noise", help="椒盐噪声密度 [0, 1)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="随机种子（默认取全局 --seed，再默认 7）"),
    out_prefix: str = typer.Option("phantom/", "--out-prefix", help="输出文件前缀"),
    spacing: Optional[float] = typer.Option(None, "--spacing", help="体素间距 mm（默认取配置）"),
    diameter: str = typer.Option(
        ",".join(str(d) for d in DEFAULT_PHANTOM_DIAMETER_MM), "--diameter",
        help="肿瘤直径范围 mm: lo,hi",
    ),
    background: str = typer.Option("value_noise", "--background", help="背景纹理 flat / gradient / value_noise"),
    patches: int = typer.Option(0, "--patches", help="额外写出 K 个平衡标签的训练 patch（0 表示不写）"),
) -> None:
    """🧪 生成带真值的合成体模"""
    import dataclasses

    from rbdiag_cli.imaging import save_mask, save_volume
    from rbdiag_cli.lpdmf import denoise_volume
    from rbdiag_cli.patcher import save_patches
    from rbdiag_cli.phantom import PhantomSpec, generate_phantom, make_patch_dataset
    from rbdiag_cli.reports import truth_report

    try:
        config = _run_config(ctx)
        nx, ny, nz = (int(v) for v in _parse_floats(dims, 3, "--dims"))
        seed = seed if seed is not None else (config.seed if config.seed is not None else 7)
        spec = PhantomSpec(
            dims=(nx, ny, nz),
            spacing_mm=spacing if spacing is not None else config.imaging.spacing_mm,
            tumor_count=tumors,
            diameter_range_mm=_parse_floats(diameter, 2, "--diameter"),
            background=background,
            noise_density=noise,
            seed=seed,
        )
        truth = generate_phantom(spec)
        save_volume(truth.volume, Path(out_prefix + "volume.rbvol"))
        save_volume(truth.clean_volume, Path(out_prefix + "clean.rbvol"))
        save_mask(truth.mask, Path(out_prefix + "mask.rbmask"))
        report_path = Path(out_prefix + "truth.txt")
        report_path.write_text(truth_report(truth), encoding="utf-8")
        if patches:
            source = truth
            if noise > 0:
                source = dataclasses.replace(truth, volume=denoise_volume(truth.volume, config.lpdmf))
            grid = config.grid
            dataset = make_patch_dataset([source], patches, seed, grid.size, grid.slices, grid.slice_step, grid.spacing)
            save_patches(dataset, Path(out_prefix + "patches.rbpatch"))
    except CLI_ERRORS as e:
        _fail("phantom", e)
    console.print(
        f"[green]✓[/green] 体模已生成: {out_prefix}（{len(truth.tumors)} 个肿瘤，{truth.mask.count} 个肿瘤体素）",
        highlight=False,
    )


# ========================================================================
# pipeline 命令
# ========================================================================


@app.command()
def pipeline(
    ctx: typer.Context,
    vol: Path = typer.Option(..., "--vol", exists=True, dir_okay=False, help="输入 .rbvol 或 PGM/PPM"),
    model: Path = typer.Option(..., "--model", "-m", help=".rbmodel 模型文件"),
    out_dir: Path = typer.Option(DEFAULT_OUTPUT_DIR, "--out-dir", "-o", help="中间产物输出目录"),
    truth: Optional[Path] = typer.Option(None, "--truth", exists=True, dir_okay=False, help="真值掩膜，给出时追加评估"),
    disc: Optional[str] = DiscOption,
    fovea: Optional[str] = FoveaOption,
    seeding: str = SeedingOption,
    vitreous: str = VitreousOption,
    flags: Optional[str] = FlagsOption,
    enucleated: bool = EnucleatedOption,
    resected: bool = ResectedOption,
    remnants: bool = RemnantsOption,
    regional: bool = RegionalOption,
    metastasis: bool = MetastasisOption,
) -> None:
    """🚀 完整流水线 — 去噪 → 分割 → 融合 → 分级 → 评估"""
    from rbdiag_cli.imaging import load_mask
    from rbdiag_cli.pipeline import run_pipeline

    try:
        config = _run_config(ctx)
        clinical = _clinical_inputs(
            disc, fovea, seeding, vitreous, flags, enucleated, resected, remnants, regional, metastasis
        )
        volume = _load_input_volume(vol, config)
        truth_mask = load_mask(truth) if truth is not None else None
        result = run_pipeline(config, volume, model, out_dir, truth_mask, clinical)
    except CLI_ERRORS as e:
        _fail("pipeline", e)
    typer.echo(result.grade_text, nl=False)
    if result.metrics_text:
        typer.echo(result.metrics_text, nl=False)
    console.print(f"[green]✓[/green] 产物已写入: {out_dir}", highlight=False)


# ========================================================================
# params / sphere 命令
# ========================================================================


@app.command()
def params() -> None:
    """🧮 逐层激活形状与参数量计算表"""
    from rbdiag_cli.micronet import layer_param_table

    table = Table(title="逐层参数量")
    table.add_column("层", style="cyan")
    table.add_column("激活形状", style="yellow")
    table.add_column("激活大小", justify="right", style="green")
    table.add_column("参数量", justify="right", style="magenta")
    for row in layer_param_table():
        table.add_row(row.name, row.shape_label, str(row.activation_size), str(row.parameters))
    console.print(table)


@app.command()
def sphere(
    scale: int = typer.Option(..., "--scale", "-n", min=1, help="尺度 N（同时作为水平圆个数）"),
) -> None:
    """🌐 球面螺旋采样点数: 离散求和 vs 闭式近似"""
    from rbdiag_cli.patcher import sphere_point_closed_form, sphere_point_count, spiral_points

    discrete = sphere_point_count(scale, scale)
    closed = sphere_point_closed_form(scale)
    console.print(f"离散求和:   {discrete:.4f}", highlight=False)
    console.print(f"闭式 4N²/π: {closed:.4f}", highlight=False)
    console.print(f"相对误差:   {abs(discrete - closed) / closed:.4%}", highlight=False)
    console.print(f"螺旋点数:   {len(spiral_points(scale))}", highlight=False)


# ========================================================================
# config 命令组
# ========================================================================

config_app = typer.Typer(
    help="⚙️ 配置管理 — 持久化 lpdmf.radius、grid.views、train.epochs 等参数",
    no_args_is_help=True,
)


@config_app.command("set")
def config_set(
    key: str = typer.Argument(..., help="配置项名称（如 lpdmf.radius / grid.views）"),
    value: str = typer.Argument(..., help="配置值"),
) -> None:
    """✏️ 设置配置项"""
    from rbdiag_cli.errors import ConfigTypeError, InvalidConfigError, UnknownKeyError
    from rbdiag_cli.settings import ALLOWED_KEYS, UserSettings

    settings = UserSettings()
    try:
        converted = settings.set(key, value)
        console.print(f"[green]✓[/green] 已保存: {key} = {converted}", highlight=False)
    except UnknownKeyError as e:
        console.print(f"[red]✗[/red] config: {e}，可选: {', '.join(ALLOWED_KEYS)}", highlight=False)
        raise typer.Exit(1)
    except ConfigTypeError:
        console.print(f"[red]✗[/red] config: 值 '{value}' 无法转换为 {key} 所需的类型", highlight=False)
        raise typer.Exit(1)
    except InvalidConfigError as e:
        console.print(f"[red]✗[/red] config: {e}", highlight=False)
        raise typer.Exit(1)


@config_app.command("get")
def config_get(
    key: Optional[str] = typer.Argument(None, help="配置项名称（留空显示全部）"),
) -> None:
    """📋 查看配置"""
    from rbdiag_cli.settings import CONFIG_FILE, UserSettings

    settings = UserSettings()

    if key:
        val = settings.get(key)
        if val is None:
            console.print(f"[dim]{key} 未设置（使用默认值）[/dim]")
        else:
            console.print(f"{key} = [cyan]{val}[/cyan]")
        return

    all_cfg = settings.all()
    if not all_cfg:
        console.print("[dim]暂无自定义配置，所有参数使用默认值。[/dim]")
        console.print(f"[dim]配置文件路径: {CONFIG_FILE}[/dim]")
        return

    console.print("[bold]⚙️ 当前配置[/bold]\n")
    table = Table()
    table.add_column("配置项", style="cyan")
    table.add_column("值", style="green")
    for k, v in sorted(all_cfg.items()):
        table.add_row(k, str(v))
    console.print(table)
    console.print(f"\n[dim]配置文件: {CONFIG_FILE}[/dim]")


@config_app.command("reset")
def config_reset(
    confirm: bool = typer.Option(False, "--confirm", "-y", help="跳过确认提示"),
) -> None:
    """🗑️ 清除所有配置"""
    from rbdiag_cli.settings import UserSettings

    settings = UserSettings()
    all_cfg = settings.all()

    if not all_cfg:
        console.print("[dim]暂无自定义配置。[/dim]")
        return

    if not confirm:
        console.print("当前配置:")
        for k, v in all_cfg.items():
            console.print(f"  {k} = {v}")
        typer.confirm("确认清除所有配置？", abort=True)

    count = settings.clear()
    console.print(f"[green]✓[/green] 已清除 {count} 项配置。")


app.add_typer(config_app, name="config")


@app.callback(invoke_without_command=True)
def main_callback(
    ctx: typer.Context,
    config: Optional[Path] = typer.Option(
        None, "--config", "-c", exists=True, dir_okay=False,
        help="key = value 运行配置文件",
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="全局随机种子（覆盖 net.seed / train.seed）"),
    verbose: bool = typer.Option(False, "--verbose", help="输出调试日志"),
    version: bool = typer.Option(False, "--version", "-v", help="显示版本号"),
) -> None:
    if version:
        console.print(f"rbdiag-cli v{__version__}")
        raise typer.Exit()
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    ctx.obj = {"config": config, "seed": seed}
    if ctx.invoked_subcommand is None:
        console.print(ctx.get_help())


def main():
    """CLI 主入口"""
    app()


if __name__ == "__main__":
    main()

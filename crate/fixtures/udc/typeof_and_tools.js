var tools = new Map();
registerTools(tools);
app.post('/tool', (req, res) => {
  var tool = tools.get(req.tool);
  (typeof tool === 'function') && tool(req.args);
});
